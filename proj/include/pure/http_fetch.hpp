#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pure {

struct FetchLimits {
    std::chrono::milliseconds timeout{30'000};
    std::size_t max_body_bytes = 10 * 1024 * 1024;
};

class FetchError : public std::runtime_error {
public:
    enum class Kind { InvalidUrl, Network, Status, Oversize };

    FetchError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Outbound HTTP GET. All traffic leaving the service goes through one of
/// these, so a wrapping implementation sees every remote request.
class HttpFetcher {
public:
    virtual ~HttpFetcher() = default;

    /// Returns the body of a 2xx response; throws FetchError otherwise.
    virtual std::string get(const std::string& url, const FetchLimits& limits) = 0;
};

std::shared_ptr<HttpFetcher> make_http_fetcher();

/// application/x-www-form-urlencoded style escaping of one value.
std::string url_encode(std::string_view value);

}  // namespace pure
