#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pure/http_fetch.hpp"
#include "pure/label.hpp"

namespace pure {

/// One upstream hit, in upstream order. The URL is raw upstream text.
struct UpstreamResult {
    std::string url;
    std::string title;
    std::string snippet;
    std::optional<double> score;

    friend bool operator==(const UpstreamResult&, const UpstreamResult&) = default;
};

inline constexpr int kDefaultResultLimit = 20;
inline constexpr int kMaxResultLimit = 100;

class InvalidQuery : public InvalidValue {
public:
    using InvalidValue::InvalidValue;
};

class GatewayError : public std::runtime_error {
public:
    enum class Kind { Network, Status, Decode };

    GatewayError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

std::string_view to_string(GatewayError::Kind kind) noexcept;

/// Decodes the metasearch engine's JSON results document
/// (`{"results": [{"url", "title", "content", "score"}, ...]}`).
/// Entries without a usable url string are skipped. Throws
/// GatewayError(Decode) when the body is not such a document.
std::vector<UpstreamResult> decode_upstream_results(std::string_view body);

/// Client for the upstream metasearch engine's machine-readable endpoint.
class SearchGateway {
public:
    SearchGateway(std::string upstream_base_url, std::shared_ptr<HttpFetcher> fetcher,
                  FetchLimits limits = {std::chrono::seconds(10), 10 * 1024 * 1024});

    /// The query is trimmed; an empty result throws InvalidQuery before any
    /// request is made. limit must be positive and is capped at
    /// kMaxResultLimit. Note the query text itself is sent upstream.
    std::vector<UpstreamResult> search(std::string_view query, int limit = kDefaultResultLimit) const;

    /// `<base>/search?q=<query>&format=json`
    std::string request_url(std::string_view trimmed_query) const;

    const std::string& base_url() const noexcept { return base_url_; }

private:
    std::string base_url_;
    std::shared_ptr<HttpFetcher> fetcher_;
    FetchLimits limits_;
};

/// Deterministic stand-in for the upstream engine, backed by a fixture
/// document mapping query strings to result arrays of
/// {url, title, snippet, score}. Unknown queries yield no results.
class MockUpstream {
public:
    static MockUpstream from_json(std::string_view fixture);
    static MockUpstream from_file(const std::filesystem::path& fixture);

    std::vector<UpstreamResult> results_for(std::string_view query) const;

    /// The same wire document the real engine returns for this query.
    std::string respond(std::string_view query) const;

private:
    std::map<std::string, std::vector<UpstreamResult>, std::less<>> fixture_;
};

/// Serves a MockUpstream over HTTP on 127.0.0.1 at an ephemeral port.
class MockUpstreamServer {
public:
    explicit MockUpstreamServer(MockUpstream upstream);
    ~MockUpstreamServer();
    MockUpstreamServer(const MockUpstreamServer&) = delete;
    MockUpstreamServer& operator=(const MockUpstreamServer&) = delete;

    std::string base_url() const;

    /// Request targets received so far, in arrival order.
    std::vector<std::string> received_targets() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pure
