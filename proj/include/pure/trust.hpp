#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "pure/label.hpp"

namespace pure {

class SourceId {
public:
    explicit SourceId(std::string id);

    const std::string& str() const noexcept { return id_; }

    friend auto operator<=>(const SourceId&, const SourceId&) = default;

private:
    std::string id_;
};

/// Rank of a label source. 0 is the highest tier; larger numbers are
/// subordinate to smaller ones.
class Tier {
public:
    constexpr Tier() = default;
    explicit Tier(long long value);

    constexpr int value() const noexcept { return value_; }

    friend auto operator<=>(const Tier&, const Tier&) = default;

private:
    int value_ = 0;
};

/// Thrown when a query names a source the data knows nothing about.
class UnknownSource : public std::out_of_range {
public:
    explicit UnknownSource(const SourceId& id)
        : std::out_of_range("unknown label source: " + id.str()) {}
};

/// (item, label) pair; ordered by item, then label.
struct ItemLabel {
    ItemId item;
    LabelName label;

    friend auto operator<=>(const ItemLabel&, const ItemLabel&) = default;
};

/// Every (source, item, label) -> value assertion plus each source's tier.
/// Holds at most one value per key; setting a key again overwrites it.
class AssertionSet {
public:
    using SourceAssertions = std::map<ItemLabel, LabelValue>;
    using ItemAssertions = std::map<SourceId, LabelValue>;

    /// Registers (or re-tiers) a source. Sources may exist with no assertions.
    void set_tier(const SourceId& source, Tier tier);

    /// Throws UnknownSource if the source has no tier yet.
    void assert_label(const SourceId& source, const ItemId& item, const LabelName& label,
                      LabelValue value);

    /// Drops the source and everything it asserted.
    void remove_source(const SourceId& source);

    const std::map<SourceId, Tier>& tiers() const noexcept { return tiers_; }
    Tier tier_of(const SourceId& source) const;
    bool has_source(const SourceId& source) const { return tiers_.contains(source); }

    /// All assertions by one source, ascending (item, label). Empty if none.
    const SourceAssertions& by_source(const SourceId& source) const;
    /// All assertions about one (item, label), ascending source. Empty if none.
    const ItemAssertions& about(const ItemLabel& key) const;
    const std::map<ItemLabel, ItemAssertions>& items() const noexcept { return by_item_; }

    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }

    /// Largest tier number present, or 0 for an empty set.
    Tier max_tier() const;

    /// Visits every assertion in ascending (source, item, label) order.
    void for_each(const std::function<void(const SourceId&, const ItemLabel&, LabelValue)>& fn) const;

private:
    std::map<SourceId, Tier> tiers_;
    std::map<SourceId, SourceAssertions> by_source_;
    std::map<ItemLabel, ItemAssertions> by_item_;
    std::size_t count_ = 0;
};

/// Expectations with magnitude below this are treated as exactly zero when
/// deciding tier override and consensus sign.
inline constexpr double kZeroExpectation = 1e-12;

constexpr bool is_zero_expectation(double e) noexcept {
    return e < kZeroExpectation && e > -kZeroExpectation;
}

struct ExpectationKey {
    ItemLabel pair;
    int tier;

    friend auto operator<=>(const ExpectationKey&, const ExpectationKey&) = default;
};

/// Materialized reputations and expectations for one AssertionSet.
///
/// Expectations are stored for every asserted (item, label) pair at every
/// tier number that has at least one source. expectation() answers for any
/// tier, resolving tiers with no sources exactly as the recursive definition
/// would: an empty tier contributes nothing, so it repeats the nearest
/// populated tier above it (or 0 when that one is zero).
class TrustModel {
public:
    TrustModel() = default;

    /// Throws UnknownSource.
    double reputation(const SourceId& source) const;

    /// Tier may be negative (always 0). Pairs nobody asserted give 0.
    double expectation(const ItemId& item, const LabelName& label, int tier) const;

    /// Expectation at the lowest tier (t_max); what the ranker consumes.
    double final_expectation(const ItemId& item, const LabelName& label) const {
        return expectation(item, label, t_max_.value());
    }

    Tier t_max() const noexcept { return t_max_; }
    const std::map<SourceId, double>& reputations() const noexcept { return reputations_; }
    const std::map<ExpectationKey, double>& expectations() const noexcept { return expectations_; }
    const std::vector<int>& populated_tiers() const noexcept { return populated_tiers_; }

private:
    friend TrustModel build_trust_model(const AssertionSet& data);

    std::map<SourceId, double> reputations_;
    std::map<ExpectationKey, double> expectations_;
    std::vector<int> populated_tiers_;  // ascending
    Tier t_max_;
};

/// Computes every reputation and expectation with memoization. Summation
/// order is ascending source id for weighted averages and ascending
/// (item, label) for agreement counts, so results are bit-reproducible.
TrustModel build_trust_model(const AssertionSet& data);

/// Single-query forms; each builds the memo for the whole set.
double reputation(const SourceId& source, const AssertionSet& data);
double expectation(const ItemId& item, const LabelName& label, int tier, const AssertionSet& data);

}  // namespace pure
