#pragma once

#include <random>
#include <string>

#include "pure/label.hpp"
#include "pure/trust.hpp"

namespace pure::testing {

struct InstanceShape {
    int max_tiers = 4;
    int max_sources = 8;
    int max_items = 10;
    int max_labels = 5;
    double density = 0.3;
};

/// Random AssertionSet: 1..max_tiers tiers, 1..max_sources sources with
/// random tiers, every (source, item, label) asserted with probability
/// `density` and a random value. Tier 0 always has at least one source so
/// reputations are not all trivially zero.
inline AssertionSet random_assertion_set(std::mt19937_64& rng, const InstanceShape& shape = {}) {
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    std::bernoulli_distribution coin(shape.density);
    std::bernoulli_distribution sign(0.5);

    const int tiers = uniform(1, shape.max_tiers);
    const int sources = uniform(1, shape.max_sources);
    const int items = uniform(1, shape.max_items);
    const int labels = uniform(1, shape.max_labels);

    AssertionSet set;
    for (int s = 0; s < sources; ++s) {
        const int tier = s == 0 ? 0 : uniform(0, tiers - 1);
        set.set_tier(SourceId("src" + std::to_string(s)), Tier(tier));
    }
    for (int s = 0; s < sources; ++s) {
        const SourceId id("src" + std::to_string(s));
        for (int i = 0; i < items; ++i) {
            const ItemId item = canonicalize_url("https://example.org/item/" + std::to_string(i));
            for (int k = 0; k < labels; ++k) {
                if (!coin(rng)) continue;
                set.assert_label(id, item, LabelName("label" + std::to_string(k)),
                                 sign(rng) ? LabelValue::Applies : LabelValue::DoesNotApply);
            }
        }
    }
    return set;
}

inline ItemId url(const std::string& text) { return canonicalize_url(text); }
inline LabelName label(const std::string& text) { return LabelName(text); }
inline SourceId source(const std::string& text) { return SourceId(text); }

}  // namespace pure::testing
