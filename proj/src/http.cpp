#include "archface/http.hpp"

#include "archface/errors.hpp"

#include <httplib.h>

namespace archface {

HttpResponse http_get(const std::string& url, const HttpHeaders& headers, std::chrono::seconds timeout) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("not an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    if (!client.is_valid()) throw ConfigError("unsupported URL: " + url);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);

    httplib::Headers request_headers;
    for (const auto& [key, value] : headers) request_headers.emplace(key, value);

    auto res = client.Get(path, request_headers);
    if (!res) {
        throw SourceUnavailableError("GET " + url + " failed: " + httplib::to_string(res.error()));
    }
    return {res->status, std::move(res->body)};
}

} // namespace archface
