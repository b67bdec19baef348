#pragma once

#include <cstdint>
#include <vector>

#include "closedtest/core.hpp"
#include "closedtest/set_family.hpp"

namespace closedtest {

struct BoundResult {
    HypothesisSet set;
    /// Lower bound on the number of false null hypotheses in `set`.
    std::size_t d = 0;
    double alpha = kDefaultAlpha;
};

/// Closed-testing decisions for every nonempty subset of m <= 25 hypotheses,
/// keyed by bitmask (bit i = hypothesis i). Upward closed by construction.
class ClosureMap {
public:
    ClosureMap(std::size_t m, double alpha, LocalTest test, std::vector<std::uint8_t> rejected);

    std::size_t m() const noexcept { return m_; }
    double alpha() const noexcept { return alpha_; }
    LocalTest local_test() const noexcept { return test_; }

    /// Mask 0 (the empty intersection) reports false.
    bool rejected(std::uint64_t mask) const { return rejected_.at(mask) != 0; }
    std::uint64_t full_mask() const noexcept { return (std::uint64_t{1} << m_) - 1; }
    std::size_t rejected_count() const;

private:
    std::size_t m_;
    double alpha_;
    LocalTest test_;
    std::vector<std::uint8_t> rejected_;
};

/// Exact closure over all 2^m - 1 intersections. Refuses m > config.closure_cap.
ClosureMap full_closure(const PValueStudy& study, const AnalysisConfig& config);

/// d(R) = |R| - (size of the largest non-rejected nonempty I within R).
BoundResult discovery_bound(const ClosureMap& closure, const HypothesisSet& set);

/// d(R) for every mask R in one O(2^m m) pass; index = mask.
std::vector<std::uint8_t> all_discovery_bounds(const ClosureMap& closure);

/// Inclusion-minimal rejected sets.
SetFamily defining_family(const ClosureMap& closure);

/// d(R) recovered from the defining family alone: a set is non-rejected iff
/// it contains no member of the family.
BoundResult bound_from_defining(const SetFamily& family, const HypothesisSet& set,
                                double alpha = kDefaultAlpha);

}  // namespace closedtest
