#include "pure/search_gateway.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace pure {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\f\v");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\f\v");
    return s.substr(first, last - first + 1);
}

std::string string_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

std::optional<double> score_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
}

json to_wire(const std::vector<UpstreamResult>& results, std::string_view query) {
    json items = json::array();
    for (const auto& r : results) {
        json item = {{"url", r.url}, {"title", r.title}, {"content", r.snippet}};
        if (r.score) item["score"] = *r.score;
        items.push_back(std::move(item));
    }
    return json{{"query", query}, {"number_of_results", results.size()}, {"results", std::move(items)}};
}

}  // namespace

std::string_view to_string(GatewayError::Kind kind) noexcept {
    switch (kind) {
        case GatewayError::Kind::Network: return "network";
        case GatewayError::Kind::Status: return "status";
        case GatewayError::Kind::Decode: return "decode";
    }
    return "unknown";
}

std::vector<UpstreamResult> decode_upstream_results(std::string_view body) {
    const json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw GatewayError(GatewayError::Kind::Decode, "upstream body is not a JSON object");
    }
    auto results = doc.find("results");
    if (results == doc.end() || !results->is_array()) {
        throw GatewayError(GatewayError::Kind::Decode, "upstream body has no results array");
    }
    std::vector<UpstreamResult> out;
    out.reserve(results->size());
    for (const auto& hit : *results) {
        if (!hit.is_object()) continue;
        UpstreamResult r;
        r.url = string_field(hit, "url");
        if (r.url.empty()) continue;
        r.title = string_field(hit, "title");
        r.snippet = string_field(hit, "content");
        r.score = score_field(hit, "score");
        out.push_back(std::move(r));
    }
    return out;
}

SearchGateway::SearchGateway(std::string upstream_base_url, std::shared_ptr<HttpFetcher> fetcher,
                             FetchLimits limits)
    : base_url_(std::move(upstream_base_url)), fetcher_(std::move(fetcher)), limits_(limits) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    if (base_url_.empty()) throw InvalidValue("upstream URL must be set");
}

std::string SearchGateway::request_url(std::string_view trimmed_query) const {
    return base_url_ + "/search?q=" + url_encode(trimmed_query) + "&format=json";
}

std::vector<UpstreamResult> SearchGateway::search(std::string_view query, int limit) const {
    const auto q = trim(query);
    if (q.empty()) throw InvalidQuery("query is empty");
    if (limit <= 0) throw InvalidQuery("limit must be positive");
    limit = std::min(limit, kMaxResultLimit);

    std::string body;
    try {
        body = fetcher_->get(request_url(q), limits_);
    } catch (const FetchError& e) {
        const auto kind = e.kind() == FetchError::Kind::Status ? GatewayError::Kind::Status
                                                                : GatewayError::Kind::Network;
        throw GatewayError(kind, std::string("upstream request failed: ") + e.what());
    }
    auto results = decode_upstream_results(body);
    if (results.size() > static_cast<std::size_t>(limit)) results.resize(static_cast<std::size_t>(limit));
    return results;
}

MockUpstream MockUpstream::from_json(std::string_view fixture) {
    const json doc = json::parse(fixture, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw InvalidValue("mock fixture must be a JSON object");
    MockUpstream mock;
    for (const auto& [query, hits] : doc.items()) {
        if (!hits.is_array()) throw InvalidValue("mock fixture entry for '" + query + "' is not an array");
        std::vector<UpstreamResult> results;
        for (const auto& hit : hits) {
            if (!hit.is_object()) throw InvalidValue("mock fixture hit for '" + query + "' is not an object");
            UpstreamResult r{string_field(hit, "url"), string_field(hit, "title"), string_field(hit, "snippet"),
                             score_field(hit, "score")};
            if (r.url.empty()) throw InvalidValue("mock fixture hit for '" + query + "' lacks a url");
            results.push_back(std::move(r));
        }
        mock.fixture_.emplace(query, std::move(results));
    }
    return mock;
}

MockUpstream MockUpstream::from_file(const std::filesystem::path& fixture) {
    std::ifstream in(fixture, std::ios::binary);
    if (!in) throw InvalidValue("cannot open mock fixture " + fixture.string());
    std::ostringstream text;
    text << in.rdbuf();
    return from_json(text.str());
}

std::vector<UpstreamResult> MockUpstream::results_for(std::string_view query) const {
    auto it = fixture_.find(trim(query));
    return it == fixture_.end() ? std::vector<UpstreamResult>{} : it->second;
}

std::string MockUpstream::respond(std::string_view query) const {
    return to_wire(results_for(query), trim(query)).dump();
}

struct MockUpstreamServer::Impl {
    MockUpstream upstream;
    httplib::Server server;
    int port = 0;
    std::thread thread;
    mutable std::mutex mutex;
    std::vector<std::string> targets;
};

MockUpstreamServer::MockUpstreamServer(MockUpstream upstream) : impl_(std::make_unique<Impl>()) {
    impl_->upstream = std::move(upstream);
    auto* impl = impl_.get();
    impl->server.set_logger([impl](const httplib::Request& req, const httplib::Response&) {
        std::lock_guard lock(impl->mutex);
        impl->targets.push_back(req.target);
    });
    impl->server.Get("/search", [impl](const httplib::Request& req, httplib::Response& res) {
        if (req.get_param_value("format") != "json") {
            res.status = 400;
            res.set_content("format=json required", "text/plain");
            return;
        }
        res.set_content(impl->upstream.respond(req.get_param_value("q")), "application/json");
    });
    impl->port = impl->server.bind_to_any_port("127.0.0.1");
    if (impl->port <= 0) throw std::runtime_error("mock upstream could not bind a loopback port");
    impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
    impl->server.wait_until_ready();
}

MockUpstreamServer::~MockUpstreamServer() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockUpstreamServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

std::vector<std::string> MockUpstreamServer::received_targets() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->targets;
}

}  // namespace pure
