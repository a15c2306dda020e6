#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pure/http_fetch.hpp"
#include "pure/label.hpp"
#include "pure/trust.hpp"

namespace pure {

enum class SourceKind { User, Remote };

struct SourceConfig {
    SourceId id;
    SourceKind kind;
    Tier tier;
    std::string url;  // empty for the user source
};

/// Id of the local user's own source, always present at tier 0.
const SourceId& user_source_id();

/// Source ids double as file names, so they are limited to
/// [A-Za-z0-9._-] and may not start with '.'.
bool is_valid_source_id(std::string_view id) noexcept;

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& message)
        : std::runtime_error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ConfigWarning {
    std::size_t line;
    std::string message;
};

/// The configured label sources. The user source comes first, remote
/// sources follow in configuration order.
class Registry {
public:
    Registry();

    const std::vector<SourceConfig>& sources() const noexcept { return sources_; }
    const SourceConfig* find(const SourceId& id) const;
    std::size_t size() const noexcept { return sources_.size(); }

    /// Throws ConfigError on duplicate ids or a non-zero user tier.
    void add_remote(SourceId id, Tier tier, std::string url);

private:
    std::vector<SourceConfig> sources_;
};

/// Sources config: one `tier TAB id TAB url` line per remote source, `#`
/// comments and blank lines ignored. A `0 TAB user` line (optionally with a
/// third field `-`) names the user source explicitly; it is injected
/// otherwise. A remote source at tier 0 is accepted with a warning.
Registry parse_sources_config(std::string_view text, std::vector<ConfigWarning>& warnings);
Registry load_sources_config(const std::filesystem::path& path, std::vector<ConfigWarning>& warnings);

struct SourceState {
    std::vector<LabelRecord> records;
    std::optional<std::chrono::system_clock::time_point> fetched_at;
    std::optional<std::string> last_error;
    std::size_t warning_count = 0;
};

using StoreSnapshot = std::map<SourceId, SourceState>;

/// Joins every source's records into one AssertionSet with tiers attached.
/// Within a source the last record for an (item, label) wins. Records of
/// sources missing from the registry are ignored.
AssertionSet consolidate(const Registry& registry, const StoreSnapshot& store);

class PersistenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RefreshOutcome {
    SourceId source;
    bool updated = false;  // false: stale, cached copy retained
    std::size_t record_count = 0;
    std::vector<ParseWarning> warnings;
    std::string error;
};

/// Registry plus the persisted label records of every source.
///
/// Data directory layout: `<data>/user.labels` and
/// `<data>/sources/<id>.labels`, both in the label file format. Mutations
/// are serialized; readers get immutable snapshots. Remote fetches happen
/// outside the write lock.
class SourceSync {
public:
    struct Options {
        FetchLimits fetch_limits{};
    };

    /// Creates the data directory if needed and hydrates the store from it.
    SourceSync(Registry registry, std::filesystem::path data_dir, std::shared_ptr<HttpFetcher> fetcher,
               Options options);
    SourceSync(Registry registry, std::filesystem::path data_dir, std::shared_ptr<HttpFetcher> fetcher)
        : SourceSync(std::move(registry), std::move(data_dir), std::move(fetcher), Options{}) {}

    const Registry& registry() const noexcept { return registry_; }
    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

    struct Snapshot {
        std::shared_ptr<const StoreSnapshot> store;
        std::uint64_t generation = 0;
    };
    Snapshot snapshot() const;

    /// Fetches a remote source and replaces its records wholesale. On any
    /// failure the previous records stay and last_error is set.
    RefreshOutcome refresh(const SourceConfig& source);
    std::vector<RefreshOutcome> refresh_all();

    /// Upserts the user's value for (item, label) and persists it before
    /// returning. Throws PersistenceError with the store left unchanged.
    AssertionSet record_user_assertion(const ItemId& item, const LabelName& label, LabelValue value);

    AssertionSet consolidate() const;

    std::filesystem::path user_file() const;
    std::filesystem::path source_file(const SourceId& id) const;

private:
    void publish(std::shared_ptr<const StoreSnapshot> next);

    Registry registry_;
    std::filesystem::path data_dir_;
    std::shared_ptr<HttpFetcher> fetcher_;
    Options options_;

    std::mutex write_mutex_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const StoreSnapshot> current_;
    std::uint64_t generation_ = 0;
};

/// Writes via a temporary file, fsync and rename.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

}  // namespace pure
