#include "closedtest/shortcut.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "closedtest/local_tests.hpp"

namespace closedtest {

namespace {

// Do the i largest p-values pass Simes? (p_(m-i+j) > j*alpha/i for j = 1..i)
bool top_set_survives(std::span<const double> sorted, std::size_t i, double alpha) {
    const std::size_t m = sorted.size();
    for (std::size_t j = 1; j <= i; ++j)
        if (sorted[m - i + j - 1] <= simes_threshold(j, i, alpha)) return false;
    return true;
}

// Range-add / prefix-max tree over u = 1..n, for bound_curve.
class MaxAddTree {
public:
    explicit MaxAddTree(std::size_t n) : n_(n), max_(4 * n + 4, 0), add_(4 * n + 4, 0) {
        if (n_) build(1, 1, n_);
    }
    void add(std::size_t lo, std::size_t hi, std::int64_t v) {
        if (lo <= hi && n_) add(1, 1, n_, lo, hi, v);
    }
    std::int64_t max(std::size_t lo, std::size_t hi) const { return query(1, 1, n_, lo, hi); }

private:
    void build(std::size_t node, std::size_t l, std::size_t r) {
        if (l == r) {
            max_[node] = 1 - static_cast<std::int64_t>(l);
            return;
        }
        const std::size_t mid = (l + r) / 2;
        build(2 * node, l, mid);
        build(2 * node + 1, mid + 1, r);
        max_[node] = std::max(max_[2 * node], max_[2 * node + 1]);
    }
    void add(std::size_t node, std::size_t l, std::size_t r, std::size_t lo, std::size_t hi,
             std::int64_t v) {
        if (hi < l || r < lo) return;
        if (lo <= l && r <= hi) {
            max_[node] += v;
            add_[node] += v;
            return;
        }
        const std::size_t mid = (l + r) / 2;
        add(2 * node, l, mid, lo, hi, v);
        add(2 * node + 1, mid + 1, r, lo, hi, v);
        max_[node] = std::max(max_[2 * node], max_[2 * node + 1]) + add_[node];
    }
    std::int64_t query(std::size_t node, std::size_t l, std::size_t r, std::size_t lo,
                       std::size_t hi) const {
        if (lo <= l && r <= hi) return max_[node];
        const std::size_t mid = (l + r) / 2;
        std::int64_t best = INT64_MIN;
        if (lo <= mid) best = std::max(best, query(2 * node, l, mid, lo, hi));
        if (hi > mid) best = std::max(best, query(2 * node + 1, mid + 1, r, lo, hi));
        return best + add_[node];
    }

    std::size_t n_;
    std::vector<std::int64_t> max_;
    std::vector<std::int64_t> add_;
};

}  // namespace

std::size_t hommel_h(std::span<const double> sorted, double alpha) {
    const std::size_t m = sorted.size();
    // The condition for i only tightens as i grows: the r-th largest p-value
    // must exceed (i-r)*alpha/i, which increases in i. So the valid i form a
    // prefix 0..h, and each r fails first at i >= r*alpha/(alpha - p).
    std::size_t h = m;
    for (std::size_t r = 0; r < m; ++r) {
        const double p = sorted[m - 1 - r];
        std::size_t first_fail = 0;
        if (p < alpha) {
            const double bound = std::ceil(static_cast<double>(r) * alpha / (alpha - p));
            first_fail = std::max<std::size_t>(r + 1, bound > static_cast<double>(m + 1)
                                                          ? m + 1
                                                          : static_cast<std::size_t>(bound));
        } else if (p == alpha && r == 0) {
            first_fail = 1;
        } else {
            continue;
        }
        if (first_fail <= h) h = first_fail - 1;
    }
    // Settle rounding at the boundary with the exact Simes comparisons.
    while (h < m && top_set_survives(sorted, h + 1, alpha)) ++h;
    while (h > 0 && !top_set_survives(sorted, h, alpha)) --h;
    return h;
}

SimesShortcutState preprocess(std::span<const double> pvalues, double alpha) {
    validate_alpha(alpha);
    if (pvalues.empty()) throw ContractViolation("preprocess needs at least one p-value");
    SimesShortcutState state;
    state.alpha_ = alpha;
    state.pvalues_.assign(pvalues.begin(), pvalues.end());
    state.order_.resize(pvalues.size());
    std::iota(state.order_.begin(), state.order_.end(), std::size_t{0});
    std::stable_sort(state.order_.begin(), state.order_.end(),
                     [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    state.sorted_.resize(pvalues.size());
    for (std::size_t k = 0; k < pvalues.size(); ++k) state.sorted_[k] = pvalues[state.order_[k]];
    state.h_ = hommel_h(state.sorted_, alpha);
    return state;
}

SimesShortcutState preprocess(const PValueStudy& study, double alpha) {
    return preprocess(study.pvalues(), alpha);
}

std::size_t shortcut_bound(const SimesShortcutState& state, std::span<const std::size_t> ids) {
    const std::size_t n = ids.size();
    if (n == 0) return 0;
    const auto pv = state.pvalues();
    std::vector<double> q;
    q.reserve(n);
    for (auto i : ids) {
        if (i >= pv.size()) throw ContractViolation("hypothesis index out of range");
        q.push_back(pv[i]);
    }
    std::vector<std::size_t> distinct(ids.begin(), ids.end());
    std::sort(distinct.begin(), distinct.end());
    if (std::adjacent_find(distinct.begin(), distinct.end()) != distinct.end())
        throw ContractViolation("duplicate hypothesis index in query set");
    if (state.h() == 0) return n;
    std::sort(q.begin(), q.end());

    std::int64_t best = 0;
    std::size_t below = 0;
    for (std::size_t u = 1; u <= n; ++u) {
        const double threshold = simes_threshold(u, state.h(), state.alpha());
        while (below < n && q[below] <= threshold) ++below;
        best = std::max(best, 1 - static_cast<std::int64_t>(u) + static_cast<std::int64_t>(below));
        if (below == n) break;  // later u only lose
    }
    return static_cast<std::size_t>(best);
}

BoundResult shortcut_bound(const SimesShortcutState& state, const HypothesisSet& set) {
    return {set, shortcut_bound(state, set.indices()), state.alpha()};
}

std::vector<std::size_t> bound_curve(const SimesShortcutState& state,
                                     std::span<const std::size_t> ordered_ids) {
    const std::size_t n = ordered_ids.size();
    std::vector<std::size_t> curve;
    curve.reserve(n);
    {
        std::vector<std::size_t> check(ordered_ids.begin(), ordered_ids.end());
        std::sort(check.begin(), check.end());
        if (std::adjacent_find(check.begin(), check.end()) != check.end())
            throw ContractViolation("bound_curve: duplicate id in ranking");
        if (!check.empty() && check.back() >= state.m())
            throw ContractViolation("bound_curve: id out of range");
    }
    if (n == 0) return curve;
    if (state.h() == 0) {
        for (std::size_t k = 1; k <= n; ++k) curve.push_back(k);
        return curve;
    }

    // Tree slot u holds 1 - u + #{ids so far with p <= u*alpha/h}.
    MaxAddTree tree(n);
    const double h = static_cast<double>(state.h());
    for (std::size_t k = 1; k <= n; ++k) {
        const double p = state.pvalues()[ordered_ids[k - 1]];
        // Smallest u with p <= u*alpha/h, settled with the exact comparison.
        const double guess = std::ceil(p * h / state.alpha());
        std::size_t u = guess < 1.0 ? 1 : (guess > static_cast<double>(n) + 1.0 ? n + 1 : static_cast<std::size_t>(guess));
        while (u > 1 && p <= simes_threshold(u - 1, state.h(), state.alpha())) --u;
        while (u <= n && p > simes_threshold(u, state.h(), state.alpha())) ++u;
        tree.add(u, n, 1);
        curve.push_back(static_cast<std::size_t>(std::max<std::int64_t>(0, tree.max(1, k))));
    }
    return curve;
}

}  // namespace closedtest
