#include "pure/label.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace pure {

namespace {

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

bool is_scheme_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '+' || c == '-' || c == '.';
}

std::string_view default_port_for(std::string_view scheme) {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kDefaults{{
        {"http", "80"},
        {"https", "443"},
        {"ftp", "21"},
        {"ws", "80"},
        {"wss", "443"},
    }};
    for (const auto& [s, port] : kDefaults) {
        if (s == scheme) return port;
    }
    return {};
}

}  // namespace

LabelName::LabelName(std::string name) : name_(std::move(name)) {
    if (!is_valid(name_)) {
        throw InvalidValue("label name must be non-empty and free of TAB/CR/LF");
    }
}

bool LabelName::is_valid(std::string_view name) noexcept {
    return !name.empty() && name.find_first_of("\t\n\r") == std::string_view::npos;
}

LabelValue label_value_from_int(long long v) {
    if (v == 1) return LabelValue::Applies;
    if (v == -1) return LabelValue::DoesNotApply;
    throw InvalidValue("label value must be 1 or -1");
}

ItemId canonicalize_url(std::string_view raw) {
    if (raw.empty()) throw MalformedUrl("empty URL");
    for (char c : raw) {
        auto u = static_cast<unsigned char>(c);
        if (u <= 0x20 || u == 0x7f) throw MalformedUrl("URL contains whitespace or control characters");
    }

    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);

    const auto colon = raw.find(':');
    if (colon == std::string_view::npos || colon == 0) throw MalformedUrl("missing scheme");
    const std::string_view scheme = raw.substr(0, colon);
    if (std::isalpha(static_cast<unsigned char>(scheme.front())) == 0 ||
        !std::all_of(scheme.begin(), scheme.end(), is_scheme_char)) {
        throw MalformedUrl("invalid scheme");
    }
    if (raw.substr(colon + 1, 2) != "//") throw MalformedUrl("missing authority");

    const std::string_view after = raw.substr(colon + 3);
    const auto authority_end = after.find_first_of("/?");
    const std::string_view authority = after.substr(0, authority_end);
    const std::string_view rest =
        authority_end == std::string_view::npos ? std::string_view{} : after.substr(authority_end);

    std::string_view userinfo;
    std::string_view hostport = authority;
    if (auto at = authority.rfind('@'); at != std::string_view::npos) {
        userinfo = authority.substr(0, at + 1);
        hostport = authority.substr(at + 1);
    }

    std::string_view host = hostport;
    std::string_view port;
    if (!hostport.empty() && hostport.front() == '[') {
        const auto close = hostport.find(']');
        if (close == std::string_view::npos) throw MalformedUrl("unterminated IPv6 literal");
        host = hostport.substr(0, close + 1);
        const auto tail = hostport.substr(close + 1);
        if (!tail.empty()) {
            if (tail.front() != ':') throw MalformedUrl("garbage after IPv6 literal");
            port = tail.substr(1);
        }
    } else if (auto pc = hostport.rfind(':'); pc != std::string_view::npos) {
        host = hostport.substr(0, pc);
        port = hostport.substr(pc + 1);
    }
    if (host.empty() || host == "[]") throw MalformedUrl("empty host");
    if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw MalformedUrl("non-numeric port");
    }

    const std::string lower_scheme = to_lower(scheme);
    std::string out;
    out.reserve(raw.size());
    out += lower_scheme;
    out += "://";
    out += userinfo;
    out += to_lower(host);
    if (!port.empty() && port != default_port_for(lower_scheme)) {
        out += ':';
        out += port;
    }
    out += rest;
    return ItemId(std::move(out));
}

ParsedLabelFile parse_label_file(std::string_view text) {
    ParsedLabelFile out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        std::string_view line =
            nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;

        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
        if (tab2 == std::string_view::npos || line.find('\t', tab2 + 1) != std::string_view::npos) {
            out.warnings.push_back({line_no, "wrong field count"});
            continue;
        }
        const auto label = line.substr(0, tab1);
        const auto value = line.substr(tab1 + 1, tab2 - tab1 - 1);
        const auto url = line.substr(tab2 + 1);

        // A lone CR inside the line would survive the split above.
        if (!LabelName::is_valid(label)) {
            out.warnings.push_back({line_no, "bad label name"});
            continue;
        }
        LabelValue parsed_value;
        if (value == "1") {
            parsed_value = LabelValue::Applies;
        } else if (value == "-1") {
            parsed_value = LabelValue::DoesNotApply;
        } else {
            out.warnings.push_back({line_no, "bad value literal"});
            continue;
        }
        try {
            out.records.push_back({LabelName(std::string(label)), parsed_value, canonicalize_url(url)});
        } catch (const MalformedUrl& e) {
            out.warnings.push_back({line_no, std::string("bad URL: ") + e.what()});
        }
    }
    return out;
}

std::string serialize_label_record(const LabelRecord& record) {
    std::string line;
    line.reserve(record.label.str().size() + record.item.url().size() + 5);
    line += record.label.str();
    line += '\t';
    line += record.value == LabelValue::Applies ? "1" : "-1";
    line += '\t';
    line += record.item.url();
    line += '\n';
    return line;
}

std::string serialize_label_file(const std::vector<LabelRecord>& records) {
    std::string out;
    for (const auto& r : records) out += serialize_label_record(r);
    return out;
}

}  // namespace pure
