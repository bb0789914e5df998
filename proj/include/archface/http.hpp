#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace archface {

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// Blocking GET of an absolute http:// or https:// URL. Follows redirects.
// Throws SourceUnavailableError when no response arrives at all; non-2xx
// statuses are returned to the caller.
HttpResponse http_get(const std::string& url, const HttpHeaders& headers = {},
                      std::chrono::seconds timeout = std::chrono::seconds(30));

} // namespace archface
