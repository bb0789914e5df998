#pragma once

#include <stdexcept>
#include <string>

namespace archface {

// Root of every error raised by the library. Callers that only need to
// report a failure can catch this; the subclasses exist so batch drivers
// and the HTTP layer can map specific failures to specific behaviour.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define ARCHFACE_ERROR(Name)                  \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

ARCHFACE_ERROR(NormalizationError);
ARCHFACE_ERROR(DimensionError);
ARCHFACE_ERROR(EmptySetError);
ARCHFACE_ERROR(ConfigError);
ARCHFACE_ERROR(ParseError);
ARCHFACE_ERROR(IOError);
ARCHFACE_ERROR(SourceUnavailableError);
ARCHFACE_ERROR(DecodeError);
ARCHFACE_ERROR(ProviderError);
ARCHFACE_ERROR(EmptySampleSetError);
ARCHFACE_ERROR(MissingReferenceError);
ARCHFACE_ERROR(NotFoundError);
ARCHFACE_ERROR(EmptyDictionaryError);

#undef ARCHFACE_ERROR

} // namespace archface
