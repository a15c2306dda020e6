#include "pure/ranker.hpp"

#include <algorithm>
#include <cmath>

namespace pure {

std::string_view to_string(Stance stance) noexcept {
    return stance == Stance::Favored ? "favored" : "disfavored";
}

std::optional<Stance> parse_stance(std::string_view word) noexcept {
    if (word == "favored") return Stance::Favored;
    if (word == "disfavored") return Stance::Disfavored;
    return std::nullopt;
}

double favorability_factor(double q) noexcept {
    if (q >= 0) return 1 + q;
    return 1 + q / (1 - q);
}

double adjustment_factor(const ItemId& item, const Policy& policy, const TrustModel& model) {
    double r = 1.0;
    for (const auto& [label, stance] : policy) {
        const double e = model.final_expectation(item, label);
        const double q = stance == Stance::Favored ? e : -e;
        r *= favorability_factor(q);
    }
    return r;
}

std::vector<ScoredResult> rerank(const std::vector<UpstreamResult>& results, const Policy& policy,
                                 const TrustModel& model) {
    std::vector<ScoredResult> scored;
    scored.reserve(results.size());
    double carried_score = 1.0;
    for (const auto& r : results) {
        ScoredResult s;
        try {
            s.item = canonicalize_url(r.url);
            s.url = s.item->url();
        } catch (const MalformedUrl&) {
            s.url = r.url;
        }
        s.title = r.title;
        s.snippet = r.snippet;
        if (r.score && std::isfinite(*r.score) && *r.score > 0) carried_score = *r.score;
        s.upstream_score = carried_score;
        s.adjustment_factor = s.item ? adjustment_factor(*s.item, policy, model) : 1.0;
        s.adjusted_score = s.upstream_score * s.adjustment_factor;
        scored.push_back(std::move(s));
    }
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredResult& a, const ScoredResult& b) {
        return a.adjusted_score > b.adjusted_score;
    });
    return scored;
}

}  // namespace pure
