#include "closedtest/closure.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>

#include "closedtest/local_tests.hpp"

namespace closedtest {

namespace {

// Maps an index-space mask to a rank-space mask one byte at a time.
class MaskPermuter {
public:
    explicit MaskPermuter(std::span<const std::size_t> rank_of) {
        // Only the bytes a mask over rank_of.size() bits can populate; each
        // entry extends the entry without its lowest bit.
        const std::size_t m = rank_of.size();
        for (std::size_t b = 0; b * 8 < m; ++b) {
            auto& table = tables_[b];
            const std::uint32_t entries = std::uint32_t{1} << std::min<std::size_t>(8, m - b * 8);
            for (std::uint32_t byte = 1; byte < entries; ++byte) {
                const auto low = static_cast<std::size_t>(std::countr_zero(byte));
                table[byte] = table[byte & (byte - 1)] | std::uint32_t{1} << rank_of[b * 8 + low];
            }
        }
    }

    std::uint32_t operator()(std::uint32_t mask) const noexcept {
        return tables_[0][mask & 0xFF] | tables_[1][(mask >> 8) & 0xFF] |
               tables_[2][(mask >> 16) & 0xFF] | tables_[3][(mask >> 24) & 0xFF];
    }

private:
    std::array<std::array<std::uint32_t, 256>, 4> tables_{};
};

std::vector<std::uint8_t> simes_local_decisions(std::span<const double> pvalues, double alpha) {
    const std::size_t m = pvalues.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pvalues[a] < pvalues[b] || (pvalues[a] == pvalues[b] && a < b);
    });
    std::vector<double> sorted(m);
    std::vector<std::size_t> rank_of(m);
    for (std::size_t r = 0; r < m; ++r) {
        sorted[r] = pvalues[order[r]];
        rank_of[order[r]] = r;
    }

    // Decide in rank space, where a mask's bits enumerate its p-values ascending.
    const std::uint32_t count = std::uint32_t{1} << m;
    std::vector<std::uint8_t> by_rank(count, 0);
    for (std::uint32_t rm = 1; rm < count; ++rm) {
        const auto k = static_cast<std::size_t>(std::popcount(rm));
        std::uint32_t bits = rm;
        for (std::size_t i = 1; bits; ++i, bits &= bits - 1) {
            if (sorted[static_cast<std::size_t>(std::countr_zero(bits))] <= simes_threshold(i, k, alpha)) {
                by_rank[rm] = 1;
                break;
            }
        }
    }

    const MaskPermuter to_rank(rank_of);
    std::vector<std::uint8_t> local(count, 0);
    for (std::uint32_t mask = 1; mask < count; ++mask) local[mask] = by_rank[to_rank(mask)];
    return local;
}

std::vector<std::uint8_t> fisher_local_decisions(std::span<const double> pvalues, double alpha) {
    const std::size_t m = pvalues.size();
    std::vector<double> logs(m);
    for (std::size_t i = 0; i < m; ++i) logs[i] = std::log(std::max(pvalues[i], kLogFloor));

    const std::uint32_t count = std::uint32_t{1} << m;
    std::vector<std::uint8_t> local(count, 0);
    for (std::uint32_t mask = 1; mask < count; ++mask) {
        // Left-to-right in index order, as fisher_local sums its input.
        double stat = 0.0;
        for (std::uint32_t bits = mask; bits; bits &= bits - 1)
            stat += logs[static_cast<std::size_t>(std::countr_zero(bits))];
        stat *= -2.0;
        local[mask] = chisq_even_df_survival(stat, static_cast<std::size_t>(std::popcount(mask))) <= alpha;
    }
    return local;
}

}  // namespace

// ---------------------------------------------------------------------------

ClosureMap::ClosureMap(std::size_t m, double alpha, LocalTest test, std::vector<std::uint8_t> rejected)
    : m_(m), alpha_(alpha), test_(test), rejected_(std::move(rejected)) {
    if (m_ == 0 || m_ > kHardClosureCap) throw ContractViolation("closure map needs 1 <= m <= 25");
    if (rejected_.size() != (std::size_t{1} << m_))
        throw ContractViolation("closure map needs one decision per subset");
}

std::size_t ClosureMap::rejected_count() const {
    return static_cast<std::size_t>(std::count(rejected_.begin() + 1, rejected_.end(), std::uint8_t{1}));
}

ClosureMap full_closure(const PValueStudy& study, const AnalysisConfig& config) {
    config.validate();
    const std::size_t m = study.m();
    if (m > config.closure_cap)
        throw ConfigError("m=" + std::to_string(m) + " exceeds the exact closure cap of " +
                          std::to_string(config.closure_cap) +
                          "; use the Simes shortcut for large studies");

    auto rejected = config.local_test == LocalTest::Simes
                        ? simes_local_decisions(study.pvalues(), config.alpha)
                        : fisher_local_decisions(study.pvalues(), config.alpha);

    // Every superset of a mask is numerically larger, so a descending sweep
    // sees all immediate supersets before the mask itself.
    const std::uint32_t full = (std::uint32_t{1} << m) - 1;
    for (std::uint32_t mask = full; mask >= 1; --mask) {
        if (!rejected[mask]) continue;
        for (std::uint32_t missing = full & ~mask; missing; missing &= missing - 1) {
            if (!rejected[mask | (missing & -missing)]) {
                rejected[mask] = 0;
                break;
            }
        }
    }
    rejected[0] = 0;
    return ClosureMap(m, config.alpha, config.local_test, std::move(rejected));
}

BoundResult discovery_bound(const ClosureMap& closure, const HypothesisSet& set) {
    if (!set.empty() && set.indices().back() >= closure.m())
        throw ContractViolation("set index out of range for closure");
    const std::uint64_t r = set.mask();
    const auto size = static_cast<std::size_t>(std::popcount(r));

    std::size_t largest = 0;
    for (std::uint64_t sub = r; sub; sub = (sub - 1) & r) {
        if (closure.rejected(sub)) continue;
        largest = std::max(largest, static_cast<std::size_t>(std::popcount(sub)));
        if (largest == size) break;
    }
    return {set, size - largest, closure.alpha()};
}

std::vector<std::uint8_t> all_discovery_bounds(const ClosureMap& closure) {
    const std::size_t count = std::size_t{1} << closure.m();
    std::vector<std::uint8_t> largest(count, 0);
    std::vector<std::uint8_t> d(count, 0);
    for (std::size_t mask = 1; mask < count; ++mask) {
        const auto size = static_cast<std::uint8_t>(std::popcount(mask));
        if (!closure.rejected(mask)) {
            largest[mask] = size;
        } else {
            std::uint8_t best = 0;
            for (std::size_t bits = mask; bits; bits &= bits - 1)
                best = std::max(best, largest[mask ^ (bits & -bits)]);
            largest[mask] = best;
        }
        d[mask] = static_cast<std::uint8_t>(size - largest[mask]);
    }
    return d;
}

SetFamily defining_family(const ClosureMap& closure) {
    std::vector<std::uint64_t> minimal;
    const std::uint64_t full = closure.full_mask();
    for (std::uint64_t mask = 1; mask <= full; ++mask) {
        if (!closure.rejected(mask)) continue;
        bool is_minimal = true;
        for (std::uint64_t bits = mask; bits && is_minimal; bits &= bits - 1) {
            const std::uint64_t sub = mask ^ (bits & (~bits + 1));
            if (sub && closure.rejected(sub)) is_minimal = false;
        }
        if (is_minimal) minimal.push_back(mask);
    }
    return SetFamily::from_masks(std::move(minimal), closure.m());
}

BoundResult bound_from_defining(const SetFamily& family, const HypothesisSet& set, double alpha) {
    if (!set.empty() && set.indices().back() >= family.m())
        throw ContractViolation("set index out of range for family");
    const std::uint64_t r = set.mask();
    const std::size_t size = set.size();
    if (size == 0) return {set, 0, alpha};

    // I within R is non-rejected iff it contains no member, so the bound is
    // the smallest H within R hitting every member that lies inside R.
    std::vector<std::uint64_t> inside;
    std::uint64_t universe = 0;
    for (auto mask : family.masks()) {
        if ((mask & r) != mask) continue;
        if (mask == 0) return {set, size, alpha};
        inside.push_back(mask);
        universe |= mask;
    }
    if (inside.empty()) return {set, 0, alpha};

    std::size_t best = static_cast<std::size_t>(std::popcount(universe));
    for (std::uint64_t h = universe;; h = (h - 1) & universe) {
        const auto k = static_cast<std::size_t>(std::popcount(h));
        if (k < best &&
            std::all_of(inside.begin(), inside.end(), [h](std::uint64_t d) { return (d & h) != 0; }))
            best = k;
        if (h == 0) break;
    }
    return {set, best, alpha};
}

}  // namespace closedtest
