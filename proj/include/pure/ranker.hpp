#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pure/label.hpp"
#include "pure/search_gateway.hpp"
#include "pure/trust.hpp"

namespace pure {

enum class Stance { Favored, Disfavored };

std::string_view to_string(Stance stance) noexcept;
/// "favored" or "disfavored"; anything else is nullopt.
std::optional<Stance> parse_stance(std::string_view word) noexcept;

/// The user's per-label stance, iterated in label-name order.
using Policy = std::map<LabelName, Stance>;

struct ScoredResult {
    std::optional<ItemId> item;  // absent when the upstream URL is not canonicalizable
    std::string url;             // canonical URL, or the raw upstream text
    std::string title;
    std::string snippet;
    double upstream_score = 1.0;
    double adjustment_factor = 1.0;
    double adjusted_score = 1.0;
};

/// Multiplies 1 + q for each policy label with favorability q >= 0 and
/// 1 + q / (1 - q) for q < 0, where q is the final expectation of the
/// label, negated when the label is disfavored. Result lies in
/// [0.5^|policy|, 2^|policy|].
double adjustment_factor(const ItemId& item, const Policy& policy, const TrustModel& model);

/// Factor contributed by one label with favorability q in [-1, 1].
double favorability_factor(double q) noexcept;

/// Scores every result and stably sorts by adjusted score, highest first.
/// Results without a usable score inherit the score of the nearest scored
/// result above them, or 1 at the top of the list.
std::vector<ScoredResult> rerank(const std::vector<UpstreamResult>& results, const Policy& policy,
                                 const TrustModel& model);

}  // namespace pure
