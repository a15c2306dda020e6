#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pure {

/// Thrown when a value violates the invariants of a domain type.
class InvalidValue : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown by canonicalize_url for text that is not an absolute URL.
class MalformedUrl : public InvalidValue {
public:
    using InvalidValue::InvalidValue;
};

/// An uninterpreted label string such as "hascookiebanner".
/// Never empty and never contains TAB, LF or CR.
class LabelName {
public:
    explicit LabelName(std::string name);

    const std::string& str() const noexcept { return name_; }

    static bool is_valid(std::string_view name) noexcept;

    friend auto operator<=>(const LabelName&, const LabelName&) = default;

private:
    std::string name_;
};

/// Whether a label applies (+1) or does not apply (-1) to an item.
enum class LabelValue : int { Applies = 1, DoesNotApply = -1 };

constexpr int to_int(LabelValue v) noexcept { return static_cast<int>(v); }

/// Accepts exactly 1 or -1.
LabelValue label_value_from_int(long long v);

/// A canonical absolute URL. Only canonicalize_url produces these.
class ItemId {
public:
    const std::string& url() const noexcept { return url_; }

    friend auto operator<=>(const ItemId&, const ItemId&) = default;

private:
    explicit ItemId(std::string url) : url_(std::move(url)) {}
    friend ItemId canonicalize_url(std::string_view raw);

    std::string url_;
};

/// Lowercases scheme and host, strips the fragment and a default port.
/// Everything else (userinfo, path, query) is kept byte for byte.
/// Throws MalformedUrl when there is no scheme, no authority, an empty
/// host, a non-numeric port, or whitespace/control bytes anywhere.
ItemId canonicalize_url(std::string_view raw);

struct LabelRecord {
    LabelName label;
    LabelValue value;
    ItemId item;

    friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

struct ParseWarning {
    std::size_t line;  // 1-based
    std::string reason;

    friend bool operator==(const ParseWarning&, const ParseWarning&) = default;
};

struct ParsedLabelFile {
    std::vector<LabelRecord> records;
    std::vector<ParseWarning> warnings;
};

/// Parses `label TAB value TAB url` lines. Malformed lines are skipped and
/// reported; blank lines are ignored; a CR before LF is tolerated.
/// Duplicates are kept in file order (last-wins is applied by consumers).
ParsedLabelFile parse_label_file(std::string_view text);

std::string serialize_label_record(const LabelRecord& record);
std::string serialize_label_file(const std::vector<LabelRecord>& records);

}  // namespace pure
