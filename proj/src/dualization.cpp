#include "closedtest/dualization.hpp"

#include <algorithm>
#include <bit>

namespace closedtest {

namespace {

bool canonical_less(std::uint64_t a, std::uint64_t b) {
    const int ca = std::popcount(a);
    const int cb = std::popcount(b);
    if (ca != cb) return ca < cb;
    // Lexicographic on ascending indices: the first differing index decides,
    // and the set holding the smaller index comes first.
    const std::uint64_t diff = a ^ b;
    const std::uint64_t lowest = diff & (~diff + 1);
    return (a & lowest) != 0;
}

// Sorts canonically and drops duplicates and non-minimal members.
void minimize(std::vector<std::uint64_t>& sets) {
    std::sort(sets.begin(), sets.end(), canonical_less);
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    std::vector<std::uint64_t> kept;
    kept.reserve(sets.size());
    for (auto s : sets) {
        const bool dominated = std::any_of(kept.begin(), kept.end(),
                                           [s](std::uint64_t k) { return (k & s) == k; });
        if (!dominated) kept.push_back(s);
    }
    sets.swap(kept);
}

}  // namespace

DualizationResult minimal_transversals(const SetFamily& family, std::size_t emit_cap) {
    DualizationResult result;
    std::vector<std::uint64_t> current{0};
    std::vector<std::uint64_t> next;

    for (auto edge : family.masks()) {
        next.clear();
        for (auto t : current) {
            if (t & edge) {
                next.push_back(t);
                continue;
            }
            for (std::uint64_t bits = edge; bits; bits &= bits - 1)
                next.push_back(t | (bits & (~bits + 1)));
        }
        minimize(next);
        if (next.size() > emit_cap) {
            next.resize(emit_cap);
            result.truncated = true;
        }
        current.swap(next);
    }
    result.transversals = SetFamily::from_masks(std::move(current), family.m());
    return result;
}

ConditionedFamily condition_on_nulls(const SetFamily& transversals, const HypothesisSet& known_nulls) {
    const std::uint64_t known = known_nulls.mask();
    std::vector<std::uint64_t> surviving;
    std::uint64_t implicated = 0;
    for (auto t : transversals.masks()) {
        if (t & known) continue;
        surviving.push_back(t);
        implicated |= t;
    }
    return {SetFamily::from_masks(std::move(surviving), transversals.m()),
            HypothesisSet::from_mask(implicated)};
}

bool verify_duality(const SetFamily& family, const SetFamily& transversals) {
    const auto back = minimal_transversals(transversals);
    return !back.truncated && back.transversals.same_sets(family);
}

}  // namespace closedtest
