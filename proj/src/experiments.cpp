#include "closedtest/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "closedtest/closure.hpp"
#include "closedtest/global_bounds.hpp"
#include "closedtest/shortcut.hpp"

namespace closedtest {

namespace {

std::string fmt_double(double x) {
    char buf[32];
    auto end = std::to_chars(buf, buf + sizeof(buf), x).ptr;
    return std::string(buf, end);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    return value;
}

std::vector<std::size_t> parse_grid(const std::string& key, const std::string& text) {
    std::vector<std::size_t> grid;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        const auto token = trim(text.substr(pos, next - pos));
        if (!token.empty()) grid.push_back(parse_number<std::size_t>(key, token));
        pos = next + 1;
    }
    return grid;
}

void check_keys(const KeyValueConfig& kv, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : kv)
        if (!allowed.contains(key)) throw ConfigError("unknown config key '" + key + "'");
}

std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(v[i]);
    }
    return out;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe summarize(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / n;
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

template <class F>
double seconds_per_call(F&& f) {
    using clock = std::chrono::steady_clock;
    constexpr auto min_window = std::chrono::milliseconds(2);
    std::size_t calls = 0;
    const auto start = clock::now();
    auto now = start;
    do {
        f();
        ++calls;
        now = clock::now();
    } while (now - start < min_window);
    return std::chrono::duration<double>(now - start).count() / static_cast<double>(calls);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

PValueStudy simulate_study(std::size_t m, std::size_t n_false, double signal_scale, RngStream& stream) {
    if (n_false > m) throw ContractViolation("simulate_study: n_false exceeds m");
    std::vector<std::string> labels(m);
    std::vector<double> p(m);
    const double c_false = signal_scale / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        labels[i] = "h" + std::to_string(i + 1);
        p[i] = (i < n_false ? c_false : 1.0) * stream.uniform();
    }
    return PValueStudy(std::move(labels), std::move(p));
}

KeyValueConfig parse_key_value(std::istream& in) {
    KeyValueConfig kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto eq = row.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
        const auto key = trim(row.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", lineno);
        kv[key] = trim(row.substr(eq + 1));
    }
    return kv;
}

KeyValueConfig load_key_value(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_key_value(in);
}

// ---------------------------------------------------------------------------

void PowerScenario::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (!(signal_scale > 0.0 && signal_scale <= 1.0))
        throw ConfigError("signal_scale must lie in (0,1]");
    if (reps == 0) throw ConfigError("reps must be positive");
    if (calibration_reps < kMinCalibrationReps)
        throw ConfigError("calib_reps must be at least " + std::to_string(kMinCalibrationReps));
    for (auto m : m_grid)
        if (m < n_false || m == 0)
            throw ConfigError("m_grid entry " + std::to_string(m) + " is below n_false=" +
                              std::to_string(n_false));
}

PowerScenario PowerScenario::from_config(const KeyValueConfig& kv) {
    check_keys(kv, {"m_grid", "n_false", "signal_scale", "reps", "alpha", "seed", "calib_reps",
                    "calib_cache"});
    PowerScenario s;
    if (auto it = kv.find("m_grid"); it != kv.end()) s.m_grid = parse_grid(it->first, it->second);
    if (auto it = kv.find("n_false"); it != kv.end()) s.n_false = parse_number<std::size_t>(it->first, it->second);
    if (auto it = kv.find("signal_scale"); it != kv.end()) s.signal_scale = parse_number<double>(it->first, it->second);
    if (auto it = kv.find("reps"); it != kv.end()) s.reps = parse_number<std::size_t>(it->first, it->second);
    if (auto it = kv.find("alpha"); it != kv.end()) s.alpha = parse_number<double>(it->first, it->second);
    if (auto it = kv.find("seed"); it != kv.end()) s.seed = parse_number<std::uint64_t>(it->first, it->second);
    if (auto it = kv.find("calib_reps"); it != kv.end()) s.calibration_reps = parse_number<std::size_t>(it->first, it->second);
    if (auto it = kv.find("calib_cache"); it != kv.end() && !it->second.empty()) s.calibration_cache = it->second;
    s.validate();
    return s;
}

std::vector<PowerRow> run_power_experiment(const PowerScenario& scenario) {
    scenario.validate();
    std::vector<PowerRow> rows;
    std::optional<CalibrationCache> cache;
    if (scenario.calibration_cache) cache.emplace(*scenario.calibration_cache);

    for (auto m : scenario.m_grid) {
        // The calibration seed is offset so it never shares streams with the
        // replicates below.
        const std::uint64_t calib_seed = mix64(scenario.seed ^ 0x6d72u);
        const auto envelope = cache ? cache->lambda(m, scenario.alpha, scenario.calibration_reps, calib_seed)
                                    : calibrate_lambda(m, scenario.alpha, scenario.calibration_reps, calib_seed);
        std::vector<double> closed(scenario.reps), mr(scenario.reps);
        const auto everything = HypothesisSet::all(m);
        for (std::size_t r = 0; r < scenario.reps; ++r) {
            auto stream = derive_stream(scenario.seed, (static_cast<std::uint64_t>(m) << 32) | r);
            const auto study = simulate_study(m, scenario.n_false, scenario.signal_scale, stream);
            const auto state = preprocess(study, scenario.alpha);
            closed[r] = static_cast<double>(shortcut_bound(state, everything).d);
            mr[r] = static_cast<double>(mr_lower_bound(study, envelope));
        }
        const auto c = summarize(closed);
        const auto b = summarize(mr);
        rows.push_back({m, "closed_testing", c.mean, c.se, scenario.reps, scenario.alpha, scenario.seed});
        rows.push_back({m, "meinshausen_rice", b.mean, b.se, scenario.reps, scenario.alpha, scenario.seed});
    }
    return rows;
}

void write_power_csv(std::ostream& out, const PowerScenario& s, const std::vector<PowerRow>& rows) {
    out << "# power m_grid=" << join(s.m_grid) << " n_false=" << s.n_false
        << " signal_scale=" << fmt_double(s.signal_scale) << " reps=" << s.reps
        << " alpha=" << fmt_double(s.alpha) << " seed=" << s.seed
        << " calib_reps=" << s.calibration_reps << " (alpha is an assumed default)\n";
    out << "m,method,mean_bound,se,reps,alpha,seed\n";
    for (const auto& r : rows)
        out << r.m << ',' << r.method << ',' << fmt_double(r.mean_bound) << ',' << fmt_double(r.se)
            << ',' << r.reps << ',' << fmt_double(r.alpha) << ',' << r.seed << '\n';
}

// ---------------------------------------------------------------------------

void TimingScenario::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (closure_cap > kHardClosureCap) throw ConfigError("closure_cap exceeds hard ceiling 25");
    if (runs < 3) throw ConfigError("runs must be at least 3");
    for (auto m : closure_m_grid)
        if (m == 0 || m > closure_cap)
            throw ConfigError("closure grid entry " + std::to_string(m) + " outside 1.." +
                              std::to_string(closure_cap));
    for (auto m : shortcut_m_grid)
        if (m == 0) throw ConfigError("shortcut grid entries must be positive");
    if (local_tests.empty()) throw ConfigError("local_tests must name at least one test");
}

TimingScenario TimingScenario::from_config(const KeyValueConfig& kv) {
    check_keys(kv, {"closure_m_grid", "shortcut_m_grid", "local_tests", "alpha", "seed", "runs",
                    "closure_cap"});
    TimingScenario s;
    if (auto it = kv.find("closure_m_grid"); it != kv.end()) s.closure_m_grid = parse_grid(it->first, it->second);
    if (auto it = kv.find("shortcut_m_grid"); it != kv.end()) s.shortcut_m_grid = parse_grid(it->first, it->second);
    if (auto it = kv.find("alpha"); it != kv.end()) s.alpha = parse_number<double>(it->first, it->second);
    if (auto it = kv.find("seed"); it != kv.end()) s.seed = parse_number<std::uint64_t>(it->first, it->second);
    if (auto it = kv.find("runs"); it != kv.end()) s.runs = parse_number<std::size_t>(it->first, it->second);
    if (auto it = kv.find("closure_cap"); it != kv.end()) s.closure_cap = parse_number<std::size_t>(it->first, it->second);
    if (auto it = kv.find("local_tests"); it != kv.end()) {
        s.local_tests.clear();
        std::size_t pos = 0;
        const auto& text = it->second;
        while (pos <= text.size()) {
            auto next = text.find(',', pos);
            if (next == std::string::npos) next = text.size();
            const auto token = trim(text.substr(pos, next - pos));
            if (!token.empty()) s.local_tests.push_back(parse_local_test(token));
            pos = next + 1;
        }
    }
    s.validate();
    return s;
}

std::vector<TimingRow> run_timing_experiment(const TimingScenario& scenario) {
    scenario.validate();
    std::vector<TimingRow> rows;
    std::vector<double> samples(scenario.runs);

    for (auto test : scenario.local_tests) {
        AnalysisConfig config{scenario.alpha, test, scenario.closure_cap};
        for (auto m : scenario.closure_m_grid) {
            auto stream = derive_stream(scenario.seed, m);
            const auto study = simulate_study(m, std::min<std::size_t>(m / 2, 10), 0.1, stream);
            std::size_t sink = 0;
            for (auto& s : samples)
                s = seconds_per_call([&] { sink += defining_family(full_closure(study, config)).size(); });
            rows.push_back({"closure", test, m, median(samples)});
            (void)sink;
        }
    }
    for (auto m : scenario.shortcut_m_grid) {
        auto stream = derive_stream(scenario.seed, m);
        const auto study = simulate_study(m, std::min<std::size_t>(m, 10), 0.1, stream);
        const auto everything = HypothesisSet::all(m);
        std::size_t sink = 0;
        for (auto& s : samples)
            s = seconds_per_call([&] { sink += shortcut_bound(preprocess(study, scenario.alpha), everything).d; });
        rows.push_back({"shortcut", LocalTest::Simes, m, median(samples)});
        (void)sink;
    }
    return rows;
}

void write_timing_csv(std::ostream& out, const TimingScenario& s, const std::vector<TimingRow>& rows) {
    std::string tests;
    for (std::size_t i = 0; i < s.local_tests.size(); ++i) {
        if (i) tests += ';';
        tests += to_string(s.local_tests[i]);
    }
    out << "# timing closure_m_grid=" << join(s.closure_m_grid)
        << " shortcut_m_grid=" << join(s.shortcut_m_grid) << " local_tests=" << tests
        << " alpha=" << fmt_double(s.alpha) << " seed=" << s.seed << " runs=" << s.runs
        << " (median seconds per call; alpha is an assumed default)\n";
    out << "method,local_test,m,seconds\n";
    for (const auto& r : rows)
        out << r.method << ',' << to_string(r.local_test) << ',' << r.m << ',' << fmt_double(r.seconds) << '\n';
}

}  // namespace closedtest
