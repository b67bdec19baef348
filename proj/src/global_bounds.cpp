#include "closedtest/global_bounds.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace closedtest {

namespace {

constexpr double kHcUpperClamp = 1.0 - 1e-16;

std::vector<double> uniform_sample(std::size_t m, RngStream& stream) {
    std::vector<double> p(m);
    for (auto& x : p) x = stream.uniform();
    std::sort(p.begin(), p.end());
    return p;
}

double grid_lambda(std::size_t k) {
    return kLambdaGridStart * std::pow(kLambdaGridRatio, static_cast<double>(k));
}

}  // namespace

double standardized_ecdf_excess(std::span<const double> sorted) {
    const std::size_t m = sorted.size();
    const double md = static_cast<double>(m);
    double sup = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double t = sorted[i];
        if (t >= 1.0) break;
        // F jumps at t to the count of values <= t (the last of a tie run).
        if (i + 1 < m && sorted[i + 1] == t) continue;
        const double ecdf = static_cast<double>(i + 1) / md;
        const double excess = ecdf - t;
        if (excess <= 0.0) continue;
        const double scale = std::sqrt(t * (1.0 - t) / md);
        if (scale == 0.0) return INFINITY;
        sup = std::max(sup, excess / scale);
    }
    return sup;
}

BoundingFunctionConfig calibrate_lambda(std::size_t m, double alpha, std::size_t reps,
                                        std::uint64_t seed) {
    validate_alpha(alpha);
    if (reps < kMinCalibrationReps)
        throw ContractViolation("calibrate_lambda needs at least " +
                                std::to_string(kMinCalibrationReps) + " replicates");
    if (m == 0) throw ContractViolation("calibrate_lambda needs m >= 1");

    std::vector<double> excess(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        auto stream = derive_stream(seed, r);
        excess[r] = standardized_ecdf_excess(uniform_sample(m, stream));
    }
    std::sort(excess.begin(), excess.end());

    // Smallest grid point with #{excess > lambda} <= floor(alpha * reps).
    const auto allowed = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(reps)));
    std::size_t k = 0;
    auto exceeding = [&](double lambda) {
        return static_cast<std::size_t>(excess.end() -
                                        std::upper_bound(excess.begin(), excess.end(), lambda));
    };
    while (exceeding(grid_lambda(k)) > allowed) ++k;
    return {grid_lambda(k), alpha, m, reps, seed};
}

std::size_t mr_lower_bound(std::span<const double> pvalues, const BoundingFunctionConfig& config) {
    const std::size_t m = pvalues.size();
    if (config.m != m)
        throw ContractViolation("bounding function calibrated for m=" + std::to_string(config.m) +
                                " applied to m=" + std::to_string(m));
    std::vector<double> sorted(pvalues.begin(), pvalues.end());
    std::sort(sorted.begin(), sorted.end());

    const double md = static_cast<double>(m);
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double t = sorted[i];
        if (t >= 1.0) break;
        if (i + 1 < m && sorted[i + 1] == t) continue;
        const double ecdf = static_cast<double>(i + 1) / md;
        const double value =
            (ecdf - t - config.lambda * std::sqrt(t * (1.0 - t) / md)) / (1.0 - t);
        best = std::max(best, value);
    }
    return static_cast<std::size_t>(std::max(0.0, std::ceil(md * best)));
}

std::size_t mr_lower_bound(const PValueStudy& study, const BoundingFunctionConfig& config) {
    return mr_lower_bound(study.pvalues(), config);
}

double higher_criticism_sorted(std::span<const double> sorted) {
    const std::size_t m = sorted.size();
    if (m < 2) throw ContractViolation("higher_criticism needs m >= 2");
    const double md = static_cast<double>(m);
    const double root_m = std::sqrt(md);
    double hc = -INFINITY;
    for (std::size_t i = 1; i <= m / 2; ++i) {
        const double p = sorted[i - 1];
        const double pc = std::clamp(p, kLogFloor, kHcUpperClamp);
        const double stat = root_m * (static_cast<double>(i) / md - p) / std::sqrt(pc * (1.0 - pc));
        hc = std::max(hc, stat);
    }
    return hc;
}

double higher_criticism(std::span<const double> pvalues) {
    std::vector<double> sorted(pvalues.begin(), pvalues.end());
    std::sort(sorted.begin(), sorted.end());
    return higher_criticism_sorted(sorted);
}

double higher_criticism(const PValueStudy& study) { return higher_criticism(study.pvalues()); }

double hc_critical_value(std::size_t m, double alpha, std::size_t reps, std::uint64_t seed) {
    validate_alpha(alpha);
    if (reps < kMinCalibrationReps)
        throw ContractViolation("hc_critical_value needs at least " +
                                std::to_string(kMinCalibrationReps) + " replicates");
    std::vector<double> stats(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        auto stream = derive_stream(seed, r);
        stats[r] = higher_criticism_sorted(uniform_sample(m, stream));
    }
    std::sort(stats.begin(), stats.end());
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(reps)));
    rank = std::clamp<std::size_t>(rank, 1, reps);
    return stats[rank - 1];
}

// ---------------------------------------------------------------------------

CalibrationCache::CalibrationCache(std::filesystem::path file) : file_(std::move(file)) {}

std::optional<double> CalibrationCache::find(std::string_view kind, std::size_t m, double alpha,
                                             std::size_t reps, std::uint64_t seed) const {
    std::ifstream in(file_);
    if (!in) return std::nullopt;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string k;
        std::size_t mm = 0, rr = 0;
        std::string alpha_text, value_text;
        std::uint64_t ss = 0;
        if (!(row >> k >> mm >> alpha_text >> rr >> ss >> value_text)) continue;
        double a = 0.0, v = 0.0;
        std::from_chars(alpha_text.data(), alpha_text.data() + alpha_text.size(), a);
        std::from_chars(value_text.data(), value_text.data() + value_text.size(), v);
        if (k == kind && mm == m && a == alpha && rr == reps && ss == seed) return v;
    }
    return std::nullopt;
}

void CalibrationCache::store(std::string_view kind, std::size_t m, double alpha, std::size_t reps,
                             std::uint64_t seed, double value) {
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    if (!out) throw ConfigError("cannot write calibration cache " + file_.string());
    char a[32], v[32];
    auto ea = std::to_chars(a, a + sizeof(a), alpha).ptr;
    auto ev = std::to_chars(v, v + sizeof(v), value).ptr;
    out << kind << ' ' << m << ' ' << std::string_view(a, ea - a) << ' ' << reps << ' ' << seed
        << ' ' << std::string_view(v, ev - v) << '\n';
}

BoundingFunctionConfig CalibrationCache::lambda(std::size_t m, double alpha, std::size_t reps,
                                                std::uint64_t seed) {
    if (auto hit = find("mr_lambda", m, alpha, reps, seed)) return {*hit, alpha, m, reps, seed};
    auto config = calibrate_lambda(m, alpha, reps, seed);
    store("mr_lambda", m, alpha, reps, seed, config.lambda);
    return config;
}

double CalibrationCache::hc_critical(std::size_t m, double alpha, std::size_t reps,
                                     std::uint64_t seed) {
    if (auto hit = find("hc_critical", m, alpha, reps, seed)) return *hit;
    const double value = hc_critical_value(m, alpha, reps, seed);
    store("hc_critical", m, alpha, reps, seed, value);
    return value;
}

}  // namespace closedtest
