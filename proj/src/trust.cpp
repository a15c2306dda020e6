#include "pure/trust.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <optional>

namespace pure {

SourceId::SourceId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) throw InvalidValue("source id must be non-empty");
}

Tier::Tier(long long value) {
    if (value < 0 || value > std::numeric_limits<int>::max()) {
        throw InvalidValue("tier must be a non-negative integer");
    }
    value_ = static_cast<int>(value);
}

void AssertionSet::set_tier(const SourceId& source, Tier tier) { tiers_.insert_or_assign(source, tier); }

void AssertionSet::assert_label(const SourceId& source, const ItemId& item, const LabelName& label,
                                LabelValue value) {
    if (!tiers_.contains(source)) throw UnknownSource(source);
    ItemLabel key{item, label};
    auto [it, inserted] = by_source_[source].insert_or_assign(key, value);
    by_item_[std::move(key)].insert_or_assign(source, value);
    if (inserted) ++count_;
}

void AssertionSet::remove_source(const SourceId& source) {
    if (auto it = by_source_.find(source); it != by_source_.end()) {
        for (const auto& [key, value] : it->second) {
            auto item_it = by_item_.find(key);
            item_it->second.erase(source);
            if (item_it->second.empty()) by_item_.erase(item_it);
        }
        count_ -= it->second.size();
        by_source_.erase(it);
    }
    tiers_.erase(source);
}

Tier AssertionSet::tier_of(const SourceId& source) const {
    auto it = tiers_.find(source);
    if (it == tiers_.end()) throw UnknownSource(source);
    return it->second;
}

const AssertionSet::SourceAssertions& AssertionSet::by_source(const SourceId& source) const {
    static const SourceAssertions kEmpty;
    auto it = by_source_.find(source);
    return it == by_source_.end() ? kEmpty : it->second;
}

const AssertionSet::ItemAssertions& AssertionSet::about(const ItemLabel& key) const {
    static const ItemAssertions kEmpty;
    auto it = by_item_.find(key);
    return it == by_item_.end() ? kEmpty : it->second;
}

Tier AssertionSet::max_tier() const {
    Tier t;
    for (const auto& [id, tier] : tiers_) t = std::max(t, tier);
    return t;
}

void AssertionSet::for_each(
    const std::function<void(const SourceId&, const ItemLabel&, LabelValue)>& fn) const {
    for (const auto& [source, assertions] : by_source_) {
        for (const auto& [key, value] : assertions) fn(source, key, value);
    }
}

namespace {

// Greatest populated tier <= t.
std::optional<int> populated_at_or_above(const std::vector<int>& tiers, int t) {
    auto it = std::upper_bound(tiers.begin(), tiers.end(), t);
    if (it == tiers.begin()) return std::nullopt;
    return *std::prev(it);
}

std::vector<int> populated_tiers_of(const AssertionSet& data) {
    std::vector<int> tiers;
    for (const auto& [id, tier] : data.tiers()) tiers.push_back(tier.value());
    std::sort(tiers.begin(), tiers.end());
    tiers.erase(std::unique(tiers.begin(), tiers.end()), tiers.end());
    return tiers;
}

// Lazily memoized Reputation/Expectation over one AssertionSet.
class Memo {
public:
    explicit Memo(const AssertionSet& data) : data_(data), tiers_(populated_tiers_of(data)) {}

    double reputation(const SourceId& source) {
        if (auto it = reputations_.find(source); it != reputations_.end()) return it->second;
        const int tier = data_.tier_of(source).value();
        double result = 1.0;
        if (tier != 0) {
            double n = 0.0;
            double d = 0.0;
            for (const auto& [pair, value] : data_.by_source(source)) {
                const double consensus = expectation(pair, tier - 1);
                if (is_zero_expectation(consensus)) continue;
                const int x = consensus > 0 ? 1 : -1;
                n += std::abs(to_int(value) - x);
                d += 1.0;
            }
            result = d == 0.0 ? 0.0 : std::max(1.0 - n / d, 0.0);
        }
        reputations_.emplace(source, result);
        return result;
    }

    double expectation(const ItemLabel& pair, int tier) {
        if (tier < 0) return 0.0;
        const auto populated = populated_at_or_above(tiers_, tier);
        if (!populated) return 0.0;
        const double e = populated_expectation(pair, *populated);
        if (*populated == tier) return e;
        return is_zero_expectation(e) ? 0.0 : e;
    }

    // Expectation at a tier that has at least one source.
    double populated_expectation(const ItemLabel& pair, int tier) {
        ExpectationKey key{pair, tier};
        if (auto it = expectations_.find(key); it != expectations_.end()) return it->second;

        double result = expectation(pair, tier - 1);
        if (is_zero_expectation(result)) {
            double n = 0.0;
            double d = 0.0;
            for (const auto& [source, value] : data_.about(pair)) {
                if (data_.tier_of(source).value() != tier) continue;
                const double rep = reputation(source);
                n += rep * to_int(value);
                d += rep;
            }
            result = d == 0.0 ? 0.0 : n / d;
        }
        expectations_.emplace(std::move(key), result);
        return result;
    }

    const std::vector<int>& tiers() const { return tiers_; }
    std::map<SourceId, double>& reputations() { return reputations_; }
    std::map<ExpectationKey, double>& expectations() { return expectations_; }

private:
    const AssertionSet& data_;
    std::vector<int> tiers_;
    std::map<SourceId, double> reputations_;
    std::map<ExpectationKey, double> expectations_;
};

}  // namespace

double TrustModel::reputation(const SourceId& source) const {
    auto it = reputations_.find(source);
    if (it == reputations_.end()) throw UnknownSource(source);
    return it->second;
}

double TrustModel::expectation(const ItemId& item, const LabelName& label, int tier) const {
    if (tier < 0) return 0.0;
    const auto populated = populated_at_or_above(populated_tiers_, tier);
    if (!populated) return 0.0;
    auto it = expectations_.find(ExpectationKey{{item, label}, *populated});
    if (it == expectations_.end()) return 0.0;
    if (*populated == tier) return it->second;
    return is_zero_expectation(it->second) ? 0.0 : it->second;
}

TrustModel build_trust_model(const AssertionSet& data) {
    Memo memo(data);
    for (const auto& [source, tier] : data.tiers()) memo.reputation(source);
    for (const auto& [pair, assertions] : data.items()) {
        for (int tier : memo.tiers()) memo.populated_expectation(pair, tier);
    }

    TrustModel model;
    model.reputations_ = std::move(memo.reputations());
    model.expectations_ = std::move(memo.expectations());
    model.populated_tiers_ = memo.tiers();
    model.t_max_ = data.max_tier();
    return model;
}

double reputation(const SourceId& source, const AssertionSet& data) {
    Memo memo(data);
    return memo.reputation(source);
}

double expectation(const ItemId& item, const LabelName& label, int tier, const AssertionSet& data) {
    Memo memo(data);
    return memo.expectation(ItemLabel{item, label}, tier);
}

}  // namespace pure
