#pragma once

#include <cstddef>
#include <utility>

#include "closedtest/core.hpp"
#include "closedtest/set_family.hpp"

namespace closedtest {

inline constexpr std::size_t kDefaultEmitCap = 10'000;

struct DualizationResult {
    SetFamily transversals;
    /// Set when an intermediate or final family exceeded the emit cap; the
    /// transversals are then incomplete.
    bool truncated = false;
};

/// Minimal hitting sets of `family` by Berge's incremental method. The empty
/// family yields {{}}.
DualizationResult minimal_transversals(const SetFamily& family,
                                       std::size_t emit_cap = kDefaultEmitCap);

struct ConditionedFamily {
    /// Members disjoint from the known true nulls.
    SetFamily surviving;
    /// Union of the surviving members.
    HypothesisSet implicated;
};

ConditionedFamily condition_on_nulls(const SetFamily& transversals,
                                     const HypothesisSet& known_nulls);

/// True iff dualizing `transversals` gives back `family` exactly.
bool verify_duality(const SetFamily& family, const SetFamily& transversals);

}  // namespace closedtest
