// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "closedtest/closure.hpp"
#include "closedtest/dualization.hpp"
#include "closedtest/experiments.hpp"
#include "closedtest/global_bounds.hpp"
#include "closedtest/local_tests.hpp"
#include "closedtest/shortcut.hpp"
#include "oracles.hpp"

using namespace closedtest;

namespace {

using Mask = std::uint64_t;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

PValueStudy study_of(const std::vector<double>& p) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < p.size(); ++i) labels.push_back("h" + std::to_string(i + 1));
    return PValueStudy(std::move(labels), p);
}

/// Binomial standard error of a proportion at its nominal value.
double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

// ---------------------------------------------------------------------------

Outcome shortcut_matches_closure() {
    const auto start = Clock::now();
    RngStream rng(1001, 0);
    const std::array alphas{0.01, 0.05, 0.2};
    std::size_t sets_checked = 0;
    for (int instance = 0; instance < 200; ++instance) {
        const std::size_t m = 1 + static_cast<std::size_t>(instance) % 11;
        const double alpha = alphas[static_cast<std::size_t>(instance / 11) % alphas.size()];
        const auto p = oracle::mixed_pvalues(m, rng);
        const auto study = study_of(p);
        const auto closure = full_closure(study, {alpha, LocalTest::Simes, kDefaultClosureCap});
        const auto state = preprocess(study, alpha);
        for (Mask r = 0; r <= closure.full_mask(); ++r) {
            const auto set = HypothesisSet::from_mask(r);
            const auto exact = discovery_bound(closure, set).d;
            const auto fast = shortcut_bound(state, set).d;
            ++sets_checked;
            if (exact != fast)
                return {false, fmt("instance %d m=%zu alpha=%g R=%llu: closure %zu, shortcut %zu", instance, m,
                                   alpha, static_cast<unsigned long long>(r), exact, fast)};
        }
    }
    const double elapsed = seconds_since(start);
    return {elapsed < 60.0, fmt("200 instances, %zu sets, all equal; %.2f s (limit 60 s)", sets_checked, elapsed)};
}

Outcome simultaneous_coverage() {
    constexpr std::size_t m = 10, n_false = 5, reps = 1000;
    constexpr double alpha = 0.05;
    std::size_t violations = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        auto stream = derive_stream(2002, r);
        std::vector<double> p(m);
        for (std::size_t i = 0; i < m; ++i) p[i] = i < n_false ? 0.005 * stream.uniform() : stream.uniform();
        const auto closure = full_closure(study_of(p), {alpha, LocalTest::Simes, kDefaultClosureCap});
        const auto d = all_discovery_bounds(closure);
        const Mask false_nulls = (Mask{1} << n_false) - 1;
        bool violated = false;
        for (Mask set = 0; set <= closure.full_mask() && !violated; ++set)
            violated = d[set] > static_cast<std::size_t>(std::popcount(set & false_nulls));
        violations += violated;
    }
    const double rate = static_cast<double>(violations) / reps;
    const double limit = alpha + 2.0 * binomial_se(alpha, reps);
    return {rate <= limit, fmt("violation rate %.4f over %zu replicates (limit %.4f)", rate, reps, limit)};
}

Outcome power_curve_shape(std::string& csv) {
    const auto start = Clock::now();
    const PowerScenario scenario;  // defaults: n_false 10, scale 0.1, grid 20..1000, reps 500, alpha 0.05
    const auto rows = run_power_experiment(scenario);
    std::ostringstream out;
    write_power_csv(out, scenario, rows);
    csv = out.str();
    const double elapsed = seconds_since(start);

    std::vector<const PowerRow*> ct, mr;
    for (const auto& row : rows) (row.method == "closed_testing" ? ct : mr).push_back(&row);
    bool ok = elapsed < 600.0 && ct.size() == scenario.m_grid.size() && mr.size() == ct.size();
    std::string detail = "closed testing";
    for (const auto* row : ct) detail += fmt(" m=%zu:%.3f", row->m, row->mean_bound);
    if (!ok) return {false, detail + " (incomplete run)"};

    const bool start_high = ct.front()->mean_bound >= 8.0;
    bool trend = true;
    for (std::size_t k = 1; k < ct.size(); ++k) {
        const double slack = 2.0 * std::hypot(ct[k - 1]->se, ct[k]->se);
        if (ct[k]->mean_bound > ct[k - 1]->mean_bound + slack) {
            trend = false;
            detail += fmt("; rise at m=%zu beyond 2 SE", ct[k]->m);
        }
    }
    const bool mr_ahead = mr.back()->mean_bound > ct.back()->mean_bound;
    detail += fmt("; MR at m=%zu: %.3f vs %.3f; %.1f s", mr.back()->m, mr.back()->mean_bound,
                  ct.back()->mean_bound, elapsed);
    if (!start_high) detail += "; m=20 mean below 8";
    if (!mr_ahead) detail += "; MR does not exceed closed testing at the largest m";
    return {start_high && trend && mr_ahead, detail};
}

Outcome timing_shape(std::string& csv) {
    const TimingScenario scenario;
    const auto rows = run_timing_experiment(scenario);
    std::ostringstream out;
    write_timing_csv(out, scenario, rows);
    csv = out.str();

    bool ok = true;
    std::string detail;
    for (auto test : scenario.local_tests) {
        std::vector<double> t;
        for (const auto& row : rows)
            if (row.method == "closure" && row.local_test == test) t.push_back(row.seconds);
        bool increasing = t.size() == scenario.closure_m_grid.size();
        for (std::size_t k = 1; k < t.size(); ++k) increasing = increasing && t[k] > t[k - 1];
        // Grid is 2..12, so m=8 sits at index 6 and m=12 at index 10.
        const double ratio = t.size() == 11 ? t[10] / t[6] : 0.0;
        ok = ok && increasing && ratio >= 8.0;
        detail += fmt("%s closure %s, t(12)/t(8)=%.1f; ", std::string(to_string(test)).c_str(),
                      increasing ? "increasing" : "NOT increasing", ratio);
    }
    double largest = -1.0;
    for (const auto& row : rows)
        if (row.method == "shortcut" && row.m == 1'200'000) largest = row.seconds;
    ok = ok && largest >= 0.0 && largest <= 5.0;
    detail += fmt("shortcut at m=1.2e6: %.3f s (limit 5 s)", largest);
    return {ok, detail};
}

SetFamily random_antichain(std::size_t m, RngStream& rng) {
    const std::size_t tries = 1 + rng.next_u64() % 10;
    std::vector<Mask> kept;
    for (std::size_t t = 0; t < tries; ++t) {
        Mask cand = 0;
        const double density = 0.1 + 0.5 * rng.uniform();
        for (std::size_t i = 0; i < m; ++i)
            if (rng.uniform() < density) cand |= Mask{1} << i;
        if (cand == 0) cand = Mask{1} << (rng.next_u64() % m);
        const bool comparable = std::any_of(kept.begin(), kept.end(),
                                            [cand](Mask k) { return (k & cand) == k || (k & cand) == cand; });
        if (!comparable) kept.push_back(cand);
    }
    return SetFamily::from_masks(kept, m);
}

Outcome dualization_checks() {
    RngStream rng(5005, 0);
    std::size_t semantic_checked = 0;
    for (int instance = 0; instance < 500; ++instance) {
        const std::size_t m = 1 + rng.next_u64() % 12;
        const auto family = random_antichain(m, rng);
        const auto result = minimal_transversals(family);
        if (result.truncated) return {false, fmt("instance %d truncated", instance)};
        auto got = result.transversals.masks();
        auto expected = oracle::minimal_hitting_sets(family.masks(), m);
        std::sort(got.begin(), got.end());
        std::sort(expected.begin(), expected.end());
        if (got != expected) return {false, fmt("instance %d m=%zu: transversals differ from brute force", instance, m)};
        if (!verify_duality(family, result.transversals))
            return {false, fmt("instance %d m=%zu: dual of dual differs", instance, m)};
        if (m > 10) continue;
        // Every truth assignment: each defining set has a false hypothesis
        // exactly when some transversal is entirely false.
        const auto members = family.masks();
        for (Mask false_set = 0; false_set < (Mask{1} << m); ++false_set) {
            const bool premise = std::all_of(members.begin(), members.end(),
                                             [false_set](Mask d) { return (d & false_set) != 0; });
            const bool conclusion = std::any_of(got.begin(), got.end(),
                                                [false_set](Mask t) { return (t & false_set) == t; });
            if (premise && !conclusion)
                return {false, fmt("instance %d: semantic chain broken", instance)};
        }
        ++semantic_checked;
    }
    return {true, fmt("500 antichains match brute force and dual-of-dual; %zu checked over all truth assignments",
                      semantic_checked)};
}

Outcome global_null_calibration() {
    constexpr std::size_t m = 100, reps = 2000, calibration_reps = 50'000;
    constexpr double alpha = 0.05;
    const auto config = calibrate_lambda(m, alpha, calibration_reps, 6006);
    const double critical = hc_critical_value(m, alpha, calibration_reps, 6007);
    std::size_t mr_positive = 0, hc_exceed = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        auto stream = derive_stream(6008, r);
        std::vector<double> p(m);
        for (auto& x : p) x = stream.uniform();
        mr_positive += mr_lower_bound(p, config) > 0;
        hc_exceed += higher_criticism(p) > critical;
    }
    const double se = binomial_se(alpha, reps);
    const double mr_rate = static_cast<double>(mr_positive) / reps;
    const double hc_rate = static_cast<double>(hc_exceed) / reps;
    const bool mr_ok = mr_rate <= alpha + 2.0 * se;
    const bool hc_ok = std::fabs(hc_rate - alpha) <= 2.0 * se;
    return {mr_ok && hc_ok, fmt("P(MR>0)=%.4f (limit %.4f, lambda=%.4f); P(HC>crit)=%.4f (band %.4f..%.4f, crit=%.4f)",
                                mr_rate, alpha + 2.0 * se, config.lambda, hc_rate, alpha - 2.0 * se,
                                alpha + 2.0 * se, critical)};
}

Outcome chisq_numerics() {
    bool ok = chisq_even_df_survival(0.0, 1) == 1.0 && chisq_even_df_survival(0.0, 5) == 1.0;
    const double a = chisq_even_df_survival(5.9915, 1);
    const double b = chisq_even_df_survival(18.4207, 2);
    ok = ok && std::fabs(a - 0.05) <= 1e-4 && std::fabs(b - 1.021e-3) <= 1e-6;
    double worst = 0.0;
    for (std::size_t k = 1; k <= 20; ++k)
        for (double x = 0.0; x <= 100.0; x += 2.5)
            worst = std::max(worst, std::fabs(chisq_even_df_survival(x, k) - oracle::chisq_survival_quadrature(x, k)));
    ok = ok && worst <= 1e-8;
    return {ok, fmt("S(5.9915, k=1)=%.6f S(18.4207, k=2)=%.7f; max |exact-quadrature|=%.2e over k<=20, x<=100", a, b, worst)};
}

std::string drop_seconds(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    bool data = false;
    while (std::getline(in, line)) {
        if (data) line = line.substr(0, line.rfind(','));
        if (line == "method,local_test,m,seconds") data = true;
        out += line + '\n';
    }
    return out;
}

Outcome determinism(const std::string& power_first, const std::string& timing_first) {
    std::string power_again, timing_again;
    {
        const PowerScenario scenario;
        std::ostringstream out;
        write_power_csv(out, scenario, run_power_experiment(scenario));
        power_again = out.str();
    }
    {
        const TimingScenario scenario;
        std::ostringstream out;
        write_timing_csv(out, scenario, run_timing_experiment(scenario));
        timing_again = out.str();
    }
    const bool power_same = !power_first.empty() && power_first == power_again;
    const bool timing_same = !timing_first.empty() && drop_seconds(timing_first) == drop_seconds(timing_again);
    return {power_same && timing_same,
            fmt("power.csv %s (%zu bytes); timing.csv structure %s", power_same ? "identical" : "DIFFERS",
                power_first.size(), timing_same ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
    std::string power_csv, timing_csv;
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"shortcut equals closure on every set", shortcut_matches_closure},
        {"simultaneous coverage", simultaneous_coverage},
        {"power curve shape", [&] { return power_curve_shape(power_csv); }},
        {"timing shape", [&] { return timing_shape(timing_csv); }},
        {"dualization", dualization_checks},
        {"global-null calibration of MR and HC", global_null_calibration},
        {"chi-square numerics", chisq_numerics},
        {"determinism of experiment CSVs", [&] { return determinism(power_csv, timing_csv); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        failures += !outcome.pass;
        std::printf("%s %zu %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    outcome.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
