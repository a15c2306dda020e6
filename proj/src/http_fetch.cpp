#include "pure/http_fetch.hpp"

#include <httplib.h>

namespace pure {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string target;  // /path?query
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw FetchError(FetchError::Kind::InvalidUrl, "not an absolute URL: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw FetchError(FetchError::Kind::InvalidUrl, "unsupported scheme: " + scheme);
    }
    const auto path_start = url.find_first_of("/?", scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    out.target = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (out.target.front() == '?') out.target.insert(0, "/");
    if (auto hash = out.target.find('#'); hash != std::string::npos) out.target.erase(hash);
    return out;
}

class HttplibFetcher final : public HttpFetcher {
public:
    std::string get(const std::string& url, const FetchLimits& limits) override {
        const auto parts = split_url(url);
        httplib::Client client(parts.origin);
        if (!client.is_valid()) throw FetchError(FetchError::Kind::InvalidUrl, "cannot reach " + parts.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(limits.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(limits.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        client.set_follow_location(true);

        std::string body;
        bool oversize = false;
        int status = 0;
        auto result = client.Get(
            parts.target,
            [&](const httplib::Response& response) {
                status = response.status;
                return true;
            },
            [&](const char* data, std::size_t len) {
                if (body.size() + len > limits.max_body_bytes) {
                    oversize = true;
                    return false;
                }
                body.append(data, len);
                return true;
            });
        if (oversize) {
            throw FetchError(FetchError::Kind::Oversize,
                             "response body exceeds " + std::to_string(limits.max_body_bytes) + " bytes");
        }
        if (!result) {
            throw FetchError(FetchError::Kind::Network, httplib::to_string(result.error()));
        }
        if (status < 200 || status >= 300) {
            throw FetchError(FetchError::Kind::Status, "HTTP status " + std::to_string(status));
        }
        return body;
    }
};

}  // namespace

std::shared_ptr<HttpFetcher> make_http_fetcher() { return std::make_shared<HttplibFetcher>(); }

std::string url_encode(std::string_view value) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(value.size() * 3);
    for (char c : value) {
        const auto u = static_cast<unsigned char>(c);
        if ((u >= 'A' && u <= 'Z') || (u >= 'a' && u <= 'z') || (u >= '0' && u <= '9') || u == '-' ||
            u == '_' || u == '.' || u == '~') {
            out += c;
        } else {
            out += '%';
            out += kHex[u >> 4];
            out += kHex[u & 0x0f];
        }
    }
    return out;
}

}  // namespace pure
