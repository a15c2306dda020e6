#include "pure/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <ctime>
#include <fstream>
#include <sstream>

namespace pure {

using nlohmann::json;

namespace {

ApiResponse error_response(int status, std::string_view kind, std::string_view message) {
    return {status, json{{"error", {{"kind", kind}, {"message", message}}}}};
}

ApiResponse bad_request(std::string_view message) { return error_response(400, "invalid_request", message); }

std::optional<int> parse_int(std::string_view text) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::shared_ptr<const Policy> load_policy(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) return std::make_shared<const Policy>();
    std::ifstream in(file, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    const json doc = json::parse(text.str(), nullptr, false);
    if (doc.is_discarded()) throw InvalidValue("policy file " + file.string() + " is not valid JSON");
    return std::make_shared<const Policy>(policy_from_json(doc));
}

}  // namespace

json policy_to_json(const Policy& policy) {
    json doc = json::object();
    for (const auto& [label, stance] : policy) doc[label.str()] = to_string(stance);
    return doc;
}

Policy policy_from_json(const json& doc) {
    if (!doc.is_object()) throw InvalidValue("policy must be an object of label -> stance");
    Policy policy;
    for (const auto& [label, stance] : doc.items()) {
        if (!LabelName::is_valid(label)) throw InvalidValue("invalid label name in policy");
        if (!stance.is_string()) throw InvalidValue("stance for '" + label + "' must be a string");
        auto parsed = parse_stance(stance.get<std::string>());
        if (!parsed) {
            throw InvalidValue("unknown stance '" + stance.get<std::string>() + "' for '" + label +
                               "' (expected favored or disfavored)");
        }
        policy.emplace(LabelName(label), *parsed);
    }
    return policy;
}

std::string format_timestamp(std::chrono::system_clock::time_point t) {
    const std::time_t secs = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Service::Service(std::shared_ptr<SourceSync> sync, std::shared_ptr<const SearchGateway> gateway,
                 std::filesystem::path policy_file)
    : sync_(std::move(sync)),
      gateway_(std::move(gateway)),
      policy_file_(std::move(policy_file)),
      policy_(load_policy(policy_file_)) {}

std::shared_ptr<const Policy> Service::current_policy() const {
    std::lock_guard lock(policy_mutex_);
    return policy_;
}

Service::Snapshot Service::snapshot() {
    Snapshot snap;
    std::lock_guard lock(model_mutex_);
    snap.store = sync_->snapshot();
    if (!model_ || model_generation_ != snap.store.generation) {
        auto assertions = std::make_shared<const AssertionSet>(consolidate(sync_->registry(), *snap.store.store));
        model_ = std::make_shared<const TrustModel>(build_trust_model(*assertions));
        assertions_ = std::move(assertions);
        model_generation_ = snap.store.generation;
    }
    snap.assertions = assertions_;
    snap.model = model_;
    snap.policy = current_policy();
    return snap;
}

json Service::sources_table(const Snapshot& snap, bool detailed) const {
    json rows = json::array();
    for (const auto& source : sync_->registry().sources()) {
        json row = {{"id", source.id.str()}, {"tier", source.tier.value()},
                    {"reputation", snap.model->reputation(source.id)}};
        if (detailed) {
            row["kind"] = source.kind == SourceKind::User ? "user" : "remote";
            row["url"] = source.kind == SourceKind::User ? json(nullptr) : json(source.url);
            const auto& state = snap.store.store->at(source.id);
            row["records"] = state.records.size();
            row["warnings"] = state.warning_count;
            row["fetchedAt"] = state.fetched_at ? json(format_timestamp(*state.fetched_at)) : json(nullptr);
            row["lastError"] = state.last_error ? json(*state.last_error) : json(nullptr);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json Service::label_view(const Snapshot& snap, const ItemId& item) const {
    json assertions = json::array();
    json expectations = json::object();
    for (const auto& source : sync_->registry().sources()) {
        for (const auto& [pair, value] : snap.assertions->by_source(source.id)) {
            if (pair.item != item) continue;
            assertions.push_back({{"source", source.id.str()},
                                  {"tier", source.tier.value()},
                                  {"label", pair.label.str()},
                                  {"value", to_int(value)}});
            expectations[pair.label.str()] = snap.model->final_expectation(item, pair.label);
        }
    }
    return json{{"url", item.url()}, {"assertions", std::move(assertions)}, {"expectations", std::move(expectations)}};
}

ApiResponse Service::search(std::string_view query, std::optional<std::string_view> limit_text) {
    int limit = kDefaultResultLimit;
    if (limit_text) {
        auto parsed = parse_int(*limit_text);
        if (!parsed || *parsed <= 0) return bad_request("limit must be a positive integer");
        limit = *parsed;
    }

    std::vector<UpstreamResult> upstream;
    try {
        upstream = gateway_->search(query, limit);
    } catch (const InvalidQuery& e) {
        return bad_request(e.what());
    } catch (const GatewayError& e) {
        return error_response(502, std::string("upstream_") + std::string(to_string(e.kind())), e.what());
    }

    const auto snap = snapshot();
    const auto ranked = rerank(upstream, *snap.policy, *snap.model);

    json results = json::array();
    for (const auto& r : ranked) {
        json labels = json::object();
        if (r.item) {
            for (const auto& [label, stance] : *snap.policy) {
                labels[label.str()] = snap.model->final_expectation(*r.item, label);
            }
        }
        results.push_back({{"url", r.url},
                           {"title", r.title},
                           {"snippet", r.snippet},
                           {"score", r.upstream_score},
                           {"ascore", r.adjusted_score},
                           {"labels", std::move(labels)}});
    }
    return {200, json{{"query", query},
                      {"results", std::move(results)},
                      {"policy", policy_to_json(*snap.policy)},
                      {"sources", sources_table(snap, false)}}};
}

ApiResponse Service::get_policy() const { return {200, policy_to_json(*current_policy())}; }

ApiResponse Service::put_policy(std::string_view body) {
    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) return bad_request("policy body is not valid JSON");
    Policy policy;
    try {
        policy = policy_from_json(doc);
    } catch (const InvalidValue& e) {
        return bad_request(e.what());
    }

    std::lock_guard write(policy_write_mutex_);
    try {
        write_file_atomically(policy_file_, policy_to_json(policy).dump(2) + "\n");
    } catch (const PersistenceError& e) {
        return error_response(500, "persistence", e.what());
    }
    auto next = std::make_shared<const Policy>(std::move(policy));
    {
        std::lock_guard lock(policy_mutex_);
        policy_ = next;
    }
    return {200, policy_to_json(*next)};
}

ApiResponse Service::get_labels(std::string_view url) {
    std::optional<ItemId> item;
    try {
        item = canonicalize_url(url);
    } catch (const MalformedUrl& e) {
        return bad_request(std::string("malformed url: ") + e.what());
    }
    return {200, label_view(snapshot(), *item)};
}

ApiResponse Service::post_label(std::string_view body) {
    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return bad_request("body must be a JSON object {url, label, value}");

    const auto url = doc.find("url");
    const auto label = doc.find("label");
    const auto value = doc.find("value");
    if (url == doc.end() || !url->is_string()) return bad_request("url must be a string");
    if (label == doc.end() || !label->is_string() || !LabelName::is_valid(label->get<std::string>())) {
        return bad_request("label must be a non-empty string without tabs or newlines");
    }
    if (value == doc.end() || !value->is_number_integer()) return bad_request("value must be 1 or -1");

    std::optional<ItemId> item;
    LabelValue parsed_value;
    try {
        item = canonicalize_url(url->get<std::string>());
        parsed_value = label_value_from_int(value->get<long long>());
    } catch (const MalformedUrl& e) {
        return bad_request(std::string("malformed url: ") + e.what());
    } catch (const InvalidValue& e) {
        return bad_request(e.what());
    }

    try {
        sync_->record_user_assertion(*item, LabelName(label->get<std::string>()), parsed_value);
    } catch (const PersistenceError& e) {
        spdlog::error("user assertion rejected: {}", e.what());
        return error_response(500, "persistence", e.what());
    }
    return {200, label_view(snapshot(), *item)};
}

ApiResponse Service::get_sources() { return {200, sources_table(snapshot(), true)}; }

ApiResponse Service::refresh_sources() {
    json outcomes = json::array();
    for (const auto& o : sync_->refresh_all()) {
        outcomes.push_back({{"source", o.source.str()},
                            {"updated", o.updated},
                            {"records", o.record_count},
                            {"warnings", o.warnings.size()},
                            {"error", o.error.empty() ? json(nullptr) : json(o.error)}});
    }
    return {200, outcomes};
}

bool is_loopback_host(std::string_view host) noexcept {
    return host == "localhost" || host == "::1" || host == "[::1]" || host.rfind("127.", 0) == 0;
}

std::chrono::seconds parse_duration(std::string_view text) {
    std::string_view digits = text;
    long long unit = 1;
    if (!text.empty()) {
        switch (text.back()) {
            case 's': unit = 1; digits.remove_suffix(1); break;
            case 'm': unit = 60; digits.remove_suffix(1); break;
            case 'h': unit = 3600; digits.remove_suffix(1); break;
            default: break;
        }
    }
    long long value = 0;
    const auto* end = digits.data() + digits.size();
    auto [ptr, ec] = std::from_chars(digits.data(), end, value);
    if (digits.empty() || ec != std::errc{} || ptr != end || value <= 0 || value > 10'000'000) {
        throw InvalidValue("invalid duration '" + std::string(text) + "' (expected e.g. 900, 30s, 15m, 2h)");
    }
    return std::chrono::seconds(value * unit);
}

namespace {

constexpr std::string_view kIndexPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>PURESearch</title></head>
<body>
<h1>PURESearch</h1>
<p>The local search service is running. No UI assets are configured (see <code>--ui-dir</code>).</p>
<ul>
<li><code>GET /api/search?q=...</code></li>
<li><code>GET|PUT /api/policy</code></li>
<li><code>GET /api/labels?url=...</code>, <code>POST /api/labels</code></li>
<li><code>GET /api/sources</code>, <code>POST /api/refresh</code></li>
</ul>
</body></html>
)";

void send(httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
}

}  // namespace

struct ApiServer::Impl {
    Service& service;
    httplib::Server server;
    explicit Impl(Service& s) : service(s) {}
};

ApiServer::ApiServer(Service& service, std::optional<std::filesystem::path> ui_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto& server = impl_->server;
    Service* svc = &service;

    server.Get("/api/search", [svc](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> limit;
        if (req.has_param("limit")) limit = req.get_param_value("limit");
        send(res, svc->search(req.get_param_value("q"),
                              limit ? std::optional<std::string_view>(*limit) : std::nullopt));
    });
    server.Get("/api/policy", [svc](const httplib::Request&, httplib::Response& res) { send(res, svc->get_policy()); });
    server.Put("/api/policy",
               [svc](const httplib::Request& req, httplib::Response& res) { send(res, svc->put_policy(req.body)); });
    server.Get("/api/labels", [svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc->get_labels(req.get_param_value("url")));
    });
    server.Post("/api/labels",
                [svc](const httplib::Request& req, httplib::Response& res) { send(res, svc->post_label(req.body)); });
    server.Get("/api/sources", [svc](const httplib::Request&, httplib::Response& res) { send(res, svc->get_sources()); });
    server.Post("/api/refresh",
                [svc](const httplib::Request&, httplib::Response& res) { send(res, svc->refresh_sources()); });

    if (ui_dir) {
        if (!server.set_mount_point("/", ui_dir->string())) {
            throw std::runtime_error("UI directory " + ui_dir->string() + " does not exist");
        }
    } else {
        server.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(std::string(kIndexPage), "text/html; charset=utf-8");
        });
    }

    server.set_exception_handler([](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        spdlog::error("{} {}: {}", req.method, req.path, what);
        send(res, error_response(500, "internal", what));
    });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    return bound;
}

void ApiServer::run() { impl_->server.listen_after_bind(); }

void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void ApiServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

SourcePoller::SourcePoller(std::shared_ptr<SourceSync> sync, std::chrono::seconds interval)
    : sync_(std::move(sync)), interval_(interval) {
    thread_ = std::jthread([this](std::stop_token stop) {
        while (!stop.stop_requested()) {
            for (const auto& o : sync_->refresh_all()) {
                if (o.updated) {
                    spdlog::info("source '{}': {} records, {} warnings", o.source.str(), o.record_count,
                                 o.warnings.size());
                }
            }
            std::unique_lock lock(mutex_);
            wake_.wait_for(lock, stop, interval_, [] { return false; });
        }
    });
}

SourcePoller::~SourcePoller() {
    thread_.request_stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace pure
