#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "closedtest/core.hpp"

namespace closedtest {

/// p_i = c_i * u_i with c_i = signal_scale/m for the first n_false
/// hypotheses and 1 otherwise. Labels h1..hm.
PValueStudy simulate_study(std::size_t m, std::size_t n_false, double signal_scale,
                           RngStream& stream);

/// key=value lines; '#' starts a comment. Unknown keys are a ConfigError.
using KeyValueConfig = std::map<std::string, std::string>;
KeyValueConfig parse_key_value(std::istream& in);
KeyValueConfig load_key_value(const std::filesystem::path& path);

struct PowerScenario {
    std::vector<std::size_t> m_grid{20, 50, 100, 200, 500, 1000};
    std::size_t n_false = 10;
    double signal_scale = 0.1;
    std::size_t reps = 500;
    double alpha = kDefaultAlpha;
    std::uint64_t seed = 1;
    /// Replicates behind the Meinshausen-Rice envelope calibration.
    std::size_t calibration_reps = 10'000;
    /// Optional sidecar for calibration results.
    std::optional<std::filesystem::path> calibration_cache;

    void validate() const;
    static PowerScenario from_config(const KeyValueConfig& kv);
};

struct PowerRow {
    std::size_t m = 0;
    std::string method;  // "closed_testing" or "meinshausen_rice"
    double mean_bound = 0.0;
    double se = 0.0;
    std::size_t reps = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

/// Replicate r at grid value m draws from derive_stream(seed, (m << 32) | r).
std::vector<PowerRow> run_power_experiment(const PowerScenario& scenario);
void write_power_csv(std::ostream& out, const PowerScenario& scenario,
                     const std::vector<PowerRow>& rows);

struct TimingScenario {
    std::vector<std::size_t> closure_m_grid{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    std::vector<std::size_t> shortcut_m_grid{200'000, 400'000, 600'000,
                                             800'000, 1'000'000, 1'200'000};
    std::vector<LocalTest> local_tests{LocalTest::Simes, LocalTest::Fisher};
    double alpha = kDefaultAlpha;
    std::uint64_t seed = 1;
    std::size_t runs = 5;
    std::size_t closure_cap = kDefaultClosureCap;

    void validate() const;
    static TimingScenario from_config(const KeyValueConfig& kv);
};

struct TimingRow {
    std::string method;  // "closure" or "shortcut"
    LocalTest local_test = LocalTest::Simes;
    std::size_t m = 0;
    double seconds = 0.0;
};

/// Median over `runs` of per-call wall-clock time. Closure rows time
/// full_closure + defining_family; shortcut rows time preprocess plus one
/// full-set query. Studies are simulated outside the timed region.
std::vector<TimingRow> run_timing_experiment(const TimingScenario& scenario);
void write_timing_csv(std::ostream& out, const TimingScenario& scenario,
                      const std::vector<TimingRow>& rows);

}  // namespace closedtest
