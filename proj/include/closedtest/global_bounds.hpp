#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "closedtest/core.hpp"

namespace closedtest {

inline constexpr std::size_t kMinCalibrationReps = 1000;

/// Calibrated envelope lambda * sqrt(t(1-t)/m) for the Meinshausen-Rice bound.
struct BoundingFunctionConfig {
    double lambda = 0.0;
    double alpha = kDefaultAlpha;
    std::size_t m = 0;
    std::size_t calibration_reps = 0;
    std::uint64_t seed = 0;
};

/// Grid lambda_k = kLambdaGridStart * kLambdaGridRatio^k.
inline constexpr double kLambdaGridStart = 0.1;
inline constexpr double kLambdaGridRatio = 1.01;

/// sup over order statistics t = p_(i) < 1 of (F(t) - t) / sqrt(t(1-t)/m);
/// `sorted` ascending. Returns 0 when no deviation is positive.
double standardized_ecdf_excess(std::span<const double> sorted);

/// Smallest grid lambda with P_null(excess > lambda) <= alpha over `reps`
/// uniform samples of size m. Replicate r uses derive_stream(seed, r).
BoundingFunctionConfig calibrate_lambda(std::size_t m, double alpha, std::size_t reps,
                                        std::uint64_t seed);

/// Lower confidence bound on the total number of false nulls.
std::size_t mr_lower_bound(const PValueStudy& study, const BoundingFunctionConfig& config);
std::size_t mr_lower_bound(std::span<const double> pvalues, const BoundingFunctionConfig& config);

/// HC = max over i <= m/2 of sqrt(m) (i/m - p_(i)) / sqrt(p_(i)(1 - p_(i))).
double higher_criticism(const PValueStudy& study);
double higher_criticism(std::span<const double> pvalues);
double higher_criticism_sorted(std::span<const double> sorted);

/// Empirical (1 - alpha) quantile of HC under the global null: the
/// ceil((1-alpha)*reps)-th smallest of `reps` simulated statistics.
double hc_critical_value(std::size_t m, double alpha, std::size_t reps, std::uint64_t seed);

/// Small text sidecar caching calibration results keyed by (kind, m, alpha,
/// reps, seed). One `kind m alpha reps seed value` record per line.
class CalibrationCache {
public:
    explicit CalibrationCache(std::filesystem::path file);

    std::optional<double> find(std::string_view kind, std::size_t m, double alpha,
                               std::size_t reps, std::uint64_t seed) const;
    void store(std::string_view kind, std::size_t m, double alpha, std::size_t reps,
               std::uint64_t seed, double value);

    BoundingFunctionConfig lambda(std::size_t m, double alpha, std::size_t reps,
                                  std::uint64_t seed);
    double hc_critical(std::size_t m, double alpha, std::size_t reps, std::uint64_t seed);

private:
    std::filesystem::path file_;
};

}  // namespace closedtest
