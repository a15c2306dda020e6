#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <json.hpp>

#include "pure/ranker.hpp"
#include "pure/search_gateway.hpp"
#include "pure/source_sync.hpp"
#include "pure/trust.hpp"

namespace pure {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// JSON form of a policy: {"label": "favored" | "disfavored", ...}.
nlohmann::json policy_to_json(const Policy& policy);
/// Throws InvalidValue on a non-object, an invalid label name or a stance
/// outside the closed vocabulary.
Policy policy_from_json(const nlohmann::json& doc);

/// ISO 8601 UTC, second precision.
std::string format_timestamp(std::chrono::system_clock::time_point t);

/// The API handlers, independent of the HTTP transport.
///
/// Each response is computed from one snapshot of (store, model, policy).
/// The trust model is rebuilt lazily when the store has changed since the
/// last build.
class Service {
public:
    Service(std::shared_ptr<SourceSync> sync, std::shared_ptr<const SearchGateway> gateway,
            std::filesystem::path policy_file);

    ApiResponse search(std::string_view query, std::optional<std::string_view> limit);
    ApiResponse get_policy() const;
    ApiResponse put_policy(std::string_view body);
    ApiResponse get_labels(std::string_view url);
    ApiResponse post_label(std::string_view body);
    ApiResponse get_sources();
    ApiResponse refresh_sources();

    struct Snapshot {
        SourceSync::Snapshot store;
        std::shared_ptr<const AssertionSet> assertions;
        std::shared_ptr<const TrustModel> model;
        std::shared_ptr<const Policy> policy;
    };
    Snapshot snapshot();

    SourceSync& sync() noexcept { return *sync_; }

private:
    std::shared_ptr<const Policy> current_policy() const;
    nlohmann::json sources_table(const Snapshot& snap, bool detailed) const;
    nlohmann::json label_view(const Snapshot& snap, const ItemId& item) const;

    std::shared_ptr<SourceSync> sync_;
    std::shared_ptr<const SearchGateway> gateway_;
    std::filesystem::path policy_file_;

    std::mutex policy_write_mutex_;
    mutable std::mutex policy_mutex_;
    std::shared_ptr<const Policy> policy_;

    std::mutex model_mutex_;
    std::optional<std::uint64_t> model_generation_;
    std::shared_ptr<const AssertionSet> assertions_;
    std::shared_ptr<const TrustModel> model_;
};

/// Binds the API (and optional static UI assets) to an HTTP listener.
///
///   GET  /api/search?q=&limit=
///   GET  /api/policy           PUT /api/policy
///   GET  /api/labels?url=      POST /api/labels
///   GET  /api/sources          POST /api/refresh
class ApiServer {
public:
    ApiServer(Service& service, std::optional<std::filesystem::path> ui_dir);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Returns the bound port (port 0 picks an ephemeral one). Throws on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void run();
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

bool is_loopback_host(std::string_view host) noexcept;

/// "900", "900s", "15m", "2h". Throws InvalidValue; zero is rejected.
std::chrono::seconds parse_duration(std::string_view text);

/// Refreshes every remote source immediately and then once per interval
/// on a background thread.
class SourcePoller {
public:
    SourcePoller(std::shared_ptr<SourceSync> sync, std::chrono::seconds interval);
    ~SourcePoller();
    SourcePoller(const SourcePoller&) = delete;
    SourcePoller& operator=(const SourcePoller&) = delete;

private:
    std::shared_ptr<SourceSync> sync_;
    std::chrono::seconds interval_;
    std::mutex mutex_;
    std::condition_variable_any wake_;
    std::jthread thread_;
};

}  // namespace pure
