#include <chrono>
#include <memory>
#include <string>

#include <httplib.h>

#include "qaeval/actors.hpp"

namespace qaeval::actors {

namespace {

// Splits "https://host[:port]/path" into origin and path for httplib.
struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const std::size_t host_start =
        scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public Transport {
public:
    HttpResponse post(const HttpRequest& request) override {
        const SplitUrl target = split_url(request.url);
        httplib::Client client(target.origin);
        const auto seconds =
            std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
        client.set_connection_timeout(seconds.count(), 0);
        client.set_read_timeout(seconds.count(), 0);
        client.set_write_timeout(seconds.count(), 0);

        httplib::Headers headers;
        std::string content_type = "application/json";
        for (const auto& [key, value] : request.headers) {
            if (key == "Content-Type")
                content_type = value;
            else
                headers.emplace(key, value);
        }

        auto result = client.Post(target.path, headers, request.body, content_type);
        if (!result)
            return {0, "transport error: " + httplib::to_string(result.error())};
        return {result->status, result->body};
    }
};

}  // namespace

std::shared_ptr<Transport> make_default_transport() {
    return std::make_shared<HttplibTransport>();
}

}  // namespace qaeval::actors
