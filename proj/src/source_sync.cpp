#include "pure/source_sync.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pure {

namespace fs = std::filesystem;

const SourceId& user_source_id() {
    static const SourceId kUser("user");
    return kUser;
}

bool is_valid_source_id(std::string_view id) noexcept {
    if (id.empty() || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
               c == '_' || c == '-';
    });
}

Registry::Registry() { sources_.push_back({user_source_id(), SourceKind::User, Tier(0), {}}); }

const SourceConfig* Registry::find(const SourceId& id) const {
    auto it = std::find_if(sources_.begin(), sources_.end(), [&](const SourceConfig& s) { return s.id == id; });
    return it == sources_.end() ? nullptr : &*it;
}

void Registry::add_remote(SourceId id, Tier tier, std::string url) {
    if (id == user_source_id()) throw ConfigError(0, "source id 'user' is reserved for the local user");
    if (!is_valid_source_id(id.str())) throw ConfigError(0, "invalid source id '" + id.str() + "'");
    if (find(id) != nullptr) throw ConfigError(0, "duplicate source id '" + id.str() + "'");
    sources_.push_back({std::move(id), SourceKind::Remote, tier, std::move(url)});
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return fields;
}

Tier parse_tier(std::string_view text, std::size_t line) {
    if (text.empty() || text.size() > 9 ||
        !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ConfigError(line, "tier must be a non-negative integer, got '" + std::string(text) + "'");
    }
    return Tier(std::stoll(std::string(text)));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

std::vector<LabelRecord> last_wins(const std::vector<LabelRecord>& records) {
    std::map<ItemLabel, std::size_t> position;
    std::vector<LabelRecord> out;
    for (const auto& r : records) {
        ItemLabel key{r.item, r.label};
        if (auto it = position.find(key); it != position.end()) {
            out[it->second].value = r.value;
        } else {
            position.emplace(std::move(key), out.size());
            out.push_back(r);
        }
    }
    return out;
}

std::optional<std::chrono::system_clock::time_point> modified_time(const fs::path& path) {
    std::error_code ec;
    const auto t = fs::last_write_time(path, ec);
    if (ec) return std::nullopt;
    return std::chrono::time_point_cast<std::chrono::system_clock::duration>(std::chrono::file_clock::to_sys(t));
}

}  // namespace

Registry parse_sources_config(std::string_view text, std::vector<ConfigWarning>& warnings) {
    Registry registry;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        std::string_view line = nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;

        const auto fields = split_tabs(line);
        if (fields.size() >= 2 && fields[1] == "user") {
            if (fields.size() > 3 || (fields.size() == 3 && fields[2] != "-" && !fields[2].empty())) {
                throw ConfigError(line_no, "the user source takes no URL");
            }
            if (parse_tier(fields[0], line_no).value() != 0) {
                throw ConfigError(line_no, "the user source must be at tier 0");
            }
            continue;
        }
        if (fields.size() != 3) {
            throw ConfigError(line_no, "expected 'tier<TAB>id<TAB>url', got " + std::to_string(fields.size()) +
                                           " field(s)");
        }
        const Tier tier = parse_tier(fields[0], line_no);
        if (!is_valid_source_id(fields[1])) {
            throw ConfigError(line_no, "invalid source id '" + std::string(fields[1]) +
                                           "' (allowed: letters, digits, '.', '_', '-')");
        }
        const std::string url(fields[2]);
        if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0) {
            throw ConfigError(line_no, "source URL must be http:// or https://");
        }
        try {
            registry.add_remote(SourceId(std::string(fields[1])), tier, url);
        } catch (const ConfigError& e) {
            throw ConfigError(line_no, e.what());
        }
        if (tier.value() == 0) {
            warnings.push_back({line_no, "remote source '" + std::string(fields[1]) +
                                             "' is at tier 0 and will be trusted like the user"});
        }
    }
    return registry;
}

Registry load_sources_config(const fs::path& path, std::vector<ConfigWarning>& warnings) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception&) {
        throw ConfigError(0, "cannot read sources config " + path.string());
    }
    return parse_sources_config(text, warnings);
}

AssertionSet consolidate(const Registry& registry, const StoreSnapshot& store) {
    AssertionSet set;
    for (const auto& source : registry.sources()) {
        set.set_tier(source.id, source.tier);
        auto it = store.find(source.id);
        if (it == store.end()) continue;
        // assert_label overwrites, so later records win.
        for (const auto& r : it->second.records) set.assert_label(source.id, r.item, r.label, r.value);
    }
    return set;
}

void write_file_atomically(const fs::path& path, std::string_view contents) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw PersistenceError("open " + tmp.string() + ": " + std::strerror(errno));
    std::size_t written = 0;
    while (written < contents.size()) {
        const auto n = ::write(fd, contents.data() + written, contents.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int err = errno;
            ::close(fd);
            ::unlink(tmp.c_str());
            throw PersistenceError("write " + tmp.string() + ": " + std::strerror(err));
        }
        written += static_cast<std::size_t>(n);
    }
    const int synced = ::fsync(fd);
    const int sync_err = errno;
    if (::close(fd) != 0 || synced != 0) {
        const int err = synced != 0 ? sync_err : errno;
        ::unlink(tmp.c_str());
        throw PersistenceError("sync " + tmp.string() + ": " + std::strerror(err));
    }
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        const int err = errno;
        ::unlink(tmp.c_str());
        throw PersistenceError("rename to " + path.string() + ": " + std::strerror(err));
    }
    if (const int dir = ::open(path.parent_path().c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC); dir >= 0) {
        ::fsync(dir);
        ::close(dir);
    }
}

SourceSync::SourceSync(Registry registry, fs::path data_dir, std::shared_ptr<HttpFetcher> fetcher, Options options)
    : registry_(std::move(registry)), data_dir_(std::move(data_dir)), fetcher_(std::move(fetcher)), options_(options) {
    std::error_code ec;
    fs::create_directories(data_dir_ / "sources", ec);
    if (ec) throw PersistenceError("cannot create data directory " + data_dir_.string() + ": " + ec.message());

    auto store = std::make_shared<StoreSnapshot>();
    for (const auto& source : registry_.sources()) {
        const fs::path file = source.kind == SourceKind::User ? user_file() : source_file(source.id);
        SourceState state;
        if (fs::exists(file)) {
            auto parsed = parse_label_file(read_file(file));
            for (const auto& w : parsed.warnings) {
                spdlog::warn("{}:{}: {}", file.string(), w.line, w.reason);
            }
            state.warning_count = parsed.warnings.size();
            state.records = source.kind == SourceKind::User ? last_wins(parsed.records) : std::move(parsed.records);
            if (source.kind == SourceKind::Remote) state.fetched_at = modified_time(file);
        }
        store->emplace(source.id, std::move(state));
    }
    current_ = std::move(store);
}

fs::path SourceSync::user_file() const { return data_dir_ / "user.labels"; }

fs::path SourceSync::source_file(const SourceId& id) const { return data_dir_ / "sources" / (id.str() + ".labels"); }

SourceSync::Snapshot SourceSync::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return {current_, generation_};
}

void SourceSync::publish(std::shared_ptr<const StoreSnapshot> next) {
    std::lock_guard lock(snapshot_mutex_);
    current_ = std::move(next);
    ++generation_;
}

RefreshOutcome SourceSync::refresh(const SourceConfig& source) {
    RefreshOutcome outcome{source.id, false, 0, {}, {}};
    if (source.kind != SourceKind::Remote) {
        outcome.error = "not a remote source";
        return outcome;
    }

    std::optional<ParsedLabelFile> parsed;
    try {
        parsed = parse_label_file(fetcher_->get(source.url, options_.fetch_limits));
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }

    std::lock_guard write(write_mutex_);
    auto next = std::make_shared<StoreSnapshot>(*snapshot().store);
    auto& state = (*next)[source.id];
    if (!parsed) {
        spdlog::warn("refresh of source '{}' failed, keeping cached copy: {}", source.id.str(), outcome.error);
        state.last_error = outcome.error;
        publish(std::move(next));
        return outcome;
    }

    for (const auto& w : parsed->warnings) {
        spdlog::warn("source '{}' line {}: {}", source.id.str(), w.line, w.reason);
    }
    try {
        write_file_atomically(source_file(source.id), serialize_label_file(parsed->records));
    } catch (const PersistenceError& e) {
        spdlog::error("could not persist labels of source '{}': {}", source.id.str(), e.what());
    }
    outcome.updated = true;
    outcome.record_count = parsed->records.size();
    outcome.warnings = parsed->warnings;
    state.records = std::move(parsed->records);
    state.fetched_at = std::chrono::system_clock::now();
    state.last_error.reset();
    state.warning_count = outcome.warnings.size();
    publish(std::move(next));
    return outcome;
}

std::vector<RefreshOutcome> SourceSync::refresh_all() {
    std::vector<RefreshOutcome> outcomes;
    for (const auto& source : registry_.sources()) {
        if (source.kind == SourceKind::Remote) outcomes.push_back(refresh(source));
    }
    return outcomes;
}

AssertionSet SourceSync::record_user_assertion(const ItemId& item, const LabelName& label, LabelValue value) {
    std::lock_guard write(write_mutex_);
    const auto current = snapshot().store;
    auto records = current->at(user_source_id()).records;
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const LabelRecord& r) { return r.item == item && r.label == label; });
    if (it != records.end()) {
        it->value = value;
    } else {
        records.push_back({label, value, item});
    }

    write_file_atomically(user_file(), serialize_label_file(records));

    auto next = std::make_shared<StoreSnapshot>(*current);
    (*next)[user_source_id()].records = std::move(records);
    publish(next);
    return pure::consolidate(registry_, *next);
}

AssertionSet SourceSync::consolidate() const { return pure::consolidate(registry_, *snapshot().store); }

}  // namespace pure
