#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "closedtest/experiments.hpp"
#include "closedtest/shortcut.hpp"

using namespace closedtest;

namespace {

KeyValueConfig kv_of(const std::string& text) {
    std::istringstream in(text);
    return parse_key_value(in);
}

std::string power_csv(const PowerScenario& s) {
    std::ostringstream out;
    write_power_csv(out, s, run_power_experiment(s));
    return out.str();
}

}  // namespace

TEST(SimulateStudy, SignalsAreBelowScaleOverM) {
    auto stream = derive_stream(3, 0);
    const auto s = simulate_study(20, 10, 0.1, stream);
    ASSERT_EQ(s.m(), 20u);
    EXPECT_EQ(s.label(0), "h1");
    EXPECT_EQ(s.label(19), "h20");
    for (std::size_t i = 0; i < 10; ++i) EXPECT_LE(s.pvalue(i), 0.005);
    const bool some_null_large = std::any_of(s.pvalues().begin() + 10, s.pvalues().end(),
                                             [](double p) { return p > 0.005; });
    EXPECT_TRUE(some_null_large);
}

TEST(SimulateStudy, NullModelIsUniform) {
    auto stream = derive_stream(4, 0);
    const auto s = simulate_study(20000, 0, 0.1, stream);
    double sum = 0.0;
    for (double p : s.pvalues()) {
        ASSERT_GE(p, 0.0);
        ASSERT_LT(p, 1.0);
        sum += p;
    }
    EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(SimulateStudy, SameStreamSameStudy) {
    auto a = derive_stream(5, 7);
    auto b = derive_stream(5, 7);
    const auto x = simulate_study(50, 10, 0.1, a);
    const auto y = simulate_study(50, 10, 0.1, b);
    EXPECT_TRUE(std::equal(x.pvalues().begin(), x.pvalues().end(), y.pvalues().begin()));
    auto c = derive_stream(5, 7);
    EXPECT_THROW(simulate_study(5, 10, 0.1, c), ContractViolation);
}

TEST(KeyValueConfig, ParsesCommentsAndWhitespace) {
    const auto kv = kv_of("# scenario\nm_grid = 20, 50\n\nreps=3 # few\n");
    EXPECT_EQ(kv.at("m_grid"), "20, 50");
    EXPECT_EQ(kv.at("reps"), "3");
    EXPECT_THROW(kv_of("reps\n"), ParseError);
}

TEST(PowerScenario, FromConfig) {
    const auto s = PowerScenario::from_config(kv_of("m_grid=20,100\nreps=7\nseed=11\nalpha=0.1\n"));
    EXPECT_EQ(s.m_grid, (std::vector<std::size_t>{20, 100}));
    EXPECT_EQ(s.reps, 7u);
    EXPECT_EQ(s.seed, 11u);
    EXPECT_EQ(s.alpha, 0.1);
    EXPECT_EQ(s.n_false, 10u);

    EXPECT_THROW(PowerScenario::from_config(kv_of("m_grid=5,20\n")), ConfigError);
    EXPECT_THROW(PowerScenario::from_config(kv_of("colour=red\n")), ConfigError);
    EXPECT_THROW(PowerScenario::from_config(kv_of("alpha=1.5\n")), ConfigError);
    EXPECT_THROW(PowerScenario::from_config(kv_of("signal_scale=0\n")), ConfigError);
    EXPECT_THROW(PowerScenario::from_config(kv_of("reps=abc\n")), ConfigError);
    EXPECT_THROW(PowerScenario::from_config(kv_of("calib_reps=10\n")), ConfigError);
}

TEST(TimingScenario, FromConfig) {
    const auto s = TimingScenario::from_config(
        kv_of("closure_m_grid=2,3\nshortcut_m_grid=1000\nlocal_tests=fisher\nruns=3\n"));
    EXPECT_EQ(s.closure_m_grid, (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(s.local_tests, (std::vector{LocalTest::Fisher}));
    EXPECT_THROW(TimingScenario::from_config(kv_of("closure_m_grid=21\n")), ConfigError);
    EXPECT_THROW(TimingScenario::from_config(kv_of("runs=2\n")), ConfigError);
    EXPECT_THROW(TimingScenario::from_config(kv_of("local_tests=bonferroni\n")), ConfigError);
}

TEST(PowerExperiment, RowsMatchDirectComputation) {
    PowerScenario s;
    s.m_grid = {30};
    s.reps = 20;
    s.calibration_reps = 1000;
    const auto rows = run_power_experiment(s);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].method, "closed_testing");
    EXPECT_EQ(rows[1].method, "meinshausen_rice");

    double total = 0.0;
    for (std::size_t r = 0; r < s.reps; ++r) {
        auto stream = derive_stream(s.seed, (std::uint64_t{30} << 32) | r);
        const auto study = simulate_study(30, s.n_false, s.signal_scale, stream);
        total += static_cast<double>(shortcut_bound(preprocess(study, s.alpha),
                                                    HypothesisSet::all(30)).d);
    }
    EXPECT_DOUBLE_EQ(rows[0].mean_bound, total / static_cast<double>(s.reps));
    for (const auto& row : rows) {
        EXPECT_EQ(row.reps, 20u);
        EXPECT_EQ(row.alpha, 0.05);
        EXPECT_GE(row.se, 0.0);
        EXPECT_LE(row.mean_bound, 10.0);
    }
}

TEST(PowerExperiment, ClosedTestingLosesPowerWithM) {
    PowerScenario s;
    s.m_grid = {20, 1000};
    s.reps = 200;
    s.calibration_reps = 1000;
    const auto rows = run_power_experiment(s);
    EXPECT_GT(rows[0].mean_bound, rows[2].mean_bound);
}

TEST(PowerExperiment, NullScenarioGivesNearZeroBounds) {
    PowerScenario s;
    s.m_grid = {100};
    s.n_false = 0;
    s.reps = 200;
    s.calibration_reps = 2000;
    for (const auto& row : run_power_experiment(s)) EXPECT_LT(row.mean_bound, 0.2) << row.method;
}

TEST(PowerExperiment, CsvIsDeterministic) {
    PowerScenario s;
    s.m_grid = {20, 50};
    s.reps = 1;
    s.calibration_reps = 1000;
    const auto first = power_csv(s);
    EXPECT_EQ(power_csv(s), first);
    EXPECT_EQ(first.substr(0, 8), "# power ");
    EXPECT_NE(first.find("\nm,method,mean_bound,se,reps,alpha,seed\n"), std::string::npos);
    s.seed = 2;
    s.reps = 50;
    const auto other = power_csv(s);
    s.seed = 1;
    EXPECT_NE(other, power_csv(s));
}

TEST(TimingExperiment, EmptyGridsGiveHeaderOnly) {
    TimingScenario s;
    s.closure_m_grid.clear();
    s.shortcut_m_grid.clear();
    std::ostringstream out;
    write_timing_csv(out, s, run_timing_experiment(s));
    const auto text = out.str();
    EXPECT_EQ(text.substr(0, 9), "# timing ");
    EXPECT_EQ(text.substr(text.find('\n') + 1), "method,local_test,m,seconds\n");
}

TEST(TimingExperiment, SmallGridRows) {
    TimingScenario s;
    s.closure_m_grid = {2, 4};
    s.shortcut_m_grid = {1000};
    s.runs = 3;
    const auto rows = run_timing_experiment(s);
    ASSERT_EQ(rows.size(), 2u * 2u + 1u);
    for (const auto& r : rows) EXPECT_GT(r.seconds, 0.0);
    EXPECT_EQ(rows.front().method, "closure");
    EXPECT_EQ(rows.back().method, "shortcut");
}
