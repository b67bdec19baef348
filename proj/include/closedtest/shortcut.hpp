#pragma once

#include <span>
#include <vector>

#include "closedtest/closure.hpp"
#include "closedtest/core.hpp"

namespace closedtest {

/// Preprocessed state for Simes-based closed testing at any scale.
///
/// h is the size of the largest intersection not rejected by the closure:
/// the largest i such that the i largest p-values pass Simes, i.e.
/// p_(m-i+j) > j*alpha/i for all j = 1..i (h = 0 when even i = 1 fails).
class SimesShortcutState {
public:
    std::size_t m() const noexcept { return pvalues_.size(); }
    double alpha() const noexcept { return alpha_; }
    std::size_t h() const noexcept { return h_; }
    std::span<const double> sorted_pvalues() const noexcept { return sorted_; }
    /// order()[k] is the original index of the k-th smallest p-value.
    std::span<const std::size_t> order() const noexcept { return order_; }
    std::span<const double> pvalues() const noexcept { return pvalues_; }

    friend SimesShortcutState preprocess(const PValueStudy& study, double alpha);
    friend SimesShortcutState preprocess(std::span<const double> pvalues, double alpha);

private:
    SimesShortcutState() = default;

    double alpha_ = kDefaultAlpha;
    std::size_t h_ = 0;
    std::vector<double> pvalues_;
    std::vector<double> sorted_;
    std::vector<std::size_t> order_;
};

SimesShortcutState preprocess(const PValueStudy& study, double alpha);
SimesShortcutState preprocess(std::span<const double> pvalues, double alpha);

/// Hommel's h from p-values sorted ascending, in O(m).
std::size_t hommel_h(std::span<const double> sorted, double alpha);

/// d(R) = max over u = 1..|R| of 1 - u + #{i in R : p_i <= u*alpha/h}, floored
/// at 0; d(R) = |R| when h = 0. Equal to the exact Simes closure bound.
BoundResult shortcut_bound(const SimesShortcutState& state, const HypothesisSet& set);
std::size_t shortcut_bound(const SimesShortcutState& state, std::span<const std::size_t> ids);

/// d over the prefixes of a ranking; element k-1 is the bound of the first k ids.
std::vector<std::size_t> bound_curve(const SimesShortcutState& state,
                                     std::span<const std::size_t> ordered_ids);

}  // namespace closedtest
