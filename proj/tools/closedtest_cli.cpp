// Command-line front end for the closedtest library.
//
// Every subcommand prints line-oriented `key=value` text by default and CSV
// rows with `--format csv`. Validation and configuration errors exit with
// status 2 and a single `error: ...` line on stderr.

#include <charconv>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "closedtest/closure.hpp"
#include "closedtest/core.hpp"
#include "closedtest/dualization.hpp"
#include "closedtest/experiments.hpp"
#include "closedtest/global_bounds.hpp"
#include "closedtest/service.hpp"
#include "closedtest/shortcut.hpp"

namespace ct = closedtest;

namespace {

std::string num(double x) {
    char buf[32];
    auto end = std::to_chars(buf, buf + sizeof(buf), x).ptr;
    return std::string(buf, end);
}

std::string joined(const ct::HypothesisSet& set, std::span<const std::string> labels, char sep) {
    std::string out;
    bool first = true;
    for (auto i : set) {
        if (!first) out += sep;
        out += labels[i];
        first = false;
    }
    return out;
}

bool csv_format(const std::string& format) {
    if (format == "csv") return true;
    if (format == "text") return false;
    throw ct::ConfigError("unknown --format '" + format + "' (expected text|csv)");
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simultaneous true-discovery bounds for exploratory multiple testing"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string format = "text";
    app.add_option("--format", format, "Output format: text or csv")->capture_default_str();

    // bound
    auto* bound_cmd = app.add_subcommand("bound", "Lower bound on true discoveries in a set");
    std::string study_path, set_text, method = "simes";
    double alpha = ct::kDefaultAlpha;
    std::size_t closure_cap = ct::kDefaultClosureCap;
    bound_cmd->add_option("--study", study_path, "Study CSV (label,p)")->required();
    bound_cmd->add_option("--alpha", alpha, "Level")->capture_default_str();
    bound_cmd->add_option("--method", method, "Local test: simes|fisher")->capture_default_str();
    auto* set_opt = bound_cmd->add_option("--set", set_text, "Comma-separated labels (default: all)");
    bound_cmd->add_option("--closure-cap", closure_cap, "Largest m for exact closure")->capture_default_str();

    // closure
    auto* closure_cmd = app.add_subcommand("closure", "Exact closed testing; writes the defining family");
    std::string defining_out;
    closure_cmd->add_option("--study", study_path, "Study CSV (label,p)")->required();
    closure_cmd->add_option("--alpha", alpha, "Level")->capture_default_str();
    closure_cmd->add_option("--method", method, "Local test: simes|fisher")->capture_default_str();
    closure_cmd->add_option("--out-defining", defining_out, "Defining family output file")->required();
    closure_cmd->add_option("--closure-cap", closure_cap, "Largest m for exact closure")->capture_default_str();

    // dual
    auto* dual_cmd = app.add_subcommand("dual", "Minimal transversals of a set family");
    std::string family_path, known_text;
    std::size_t emit_cap = ct::kDefaultEmitCap;
    dual_cmd->add_option("--family", family_path, "Family file (one set per line)")->required();
    auto* known_opt = dual_cmd->add_option("--known-null", known_text, "Comma-separated known true nulls");
    dual_cmd->add_option("--study", study_path, "Study CSV fixing the label universe");
    dual_cmd->add_option("--emit-cap", emit_cap, "Maximum transversals kept")->capture_default_str();

    // mr-bound
    auto* mr_cmd = app.add_subcommand("mr-bound", "Lower bound on the total number of false nulls");
    std::size_t calib_reps = 10'000;
    std::uint64_t seed = 1;
    std::string cache_path;
    mr_cmd->add_option("--study", study_path, "Study CSV (label,p)")->required();
    mr_cmd->add_option("--alpha", alpha, "Level")->capture_default_str();
    mr_cmd->add_option("--calib-reps", calib_reps, "Calibration replicates")->capture_default_str();
    mr_cmd->add_option("--seed", seed, "Calibration seed")->capture_default_str();
    mr_cmd->add_option("--cache", cache_path, "Calibration sidecar file");

    // hc
    auto* hc_cmd = app.add_subcommand("hc", "Higher Criticism statistic");
    std::size_t hc_reps = 10'000;
    hc_cmd->add_option("--study", study_path, "Study CSV (label,p)")->required();
    auto* hc_alpha = hc_cmd->add_option("--alpha", alpha, "Level for the Monte Carlo critical value");
    hc_cmd->add_option("--reps", hc_reps, "Null replicates")->capture_default_str();
    hc_cmd->add_option("--seed", seed, "Null simulation seed")->capture_default_str();
    hc_cmd->add_option("--cache", cache_path, "Calibration sidecar file");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Draw a study from the sparse-signal model");
    std::size_t sim_m = 0, n_false = 10;
    double scale = 0.1;
    std::uint64_t stream_id = 0;
    std::string out_path;
    sim_cmd->add_option("--m", sim_m, "Number of hypotheses")->required();
    sim_cmd->add_option("--seed", seed, "Seed")->capture_default_str();
    sim_cmd->add_option("--stream", stream_id, "Stream id")->capture_default_str();
    auto* n_false_opt =
        sim_cmd->add_option("--n-false", n_false, "Number of false nulls (default min(10, m))");
    sim_cmd->add_option("--scale", scale, "Signal scale (c = scale/m)")->capture_default_str();
    sim_cmd->add_option("--out", out_path, "Output CSV")->required();

    // power / bench
    std::string config_path;
    auto* power_cmd = app.add_subcommand("power", "Average bounds versus m (CSV)");
    power_cmd->add_option("--config", config_path, "key=value scenario file");
    power_cmd->add_option("--out", out_path, "Output CSV")->required();
    auto* bench_cmd = app.add_subcommand("bench", "Closure versus shortcut timing (CSV)");
    bench_cmd->add_option("--config", config_path, "key=value scenario file");
    bench_cmd->add_option("--out", out_path, "Output CSV")->required();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "HTTP API for interactive exploration");
    int port = 8080;
    std::string host = "127.0.0.1", study_dir, ui_dir;
    std::size_t max_sessions = 64;
    serve_cmd->add_option("--port", port, "Port")->capture_default_str();
    serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--study-dir", study_dir, "Directory for session persistence");
    serve_cmd->add_option("--ui-dir", ui_dir, "Built UI bundle to serve statically");
    serve_cmd->add_option("--max-sessions", max_sessions, "Sessions kept in memory")->capture_default_str();
    serve_cmd->add_option("--closure-cap", closure_cap, "Largest m for exact closure")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const bool csv = csv_format(format);

        if (*bound_cmd) {
            const auto study = ct::load_study(study_path);
            ct::AnalysisConfig config{alpha, ct::parse_local_test(method), closure_cap};
            config.validate();
            const auto set = *set_opt ? ct::parse_label_set(study, set_text) : ct::HypothesisSet::all(study.m());
            ct::BoundResult result;
            std::string engine;
            if (study.m() <= config.closure_cap) {
                result = ct::discovery_bound(ct::full_closure(study, config), set);
                engine = "closure";
            } else if (config.local_test == ct::LocalTest::Simes) {
                result = ct::shortcut_bound(ct::preprocess(study, alpha), set);
                engine = "shortcut";
            } else {
                throw ct::ConfigError("fisher needs exact closure, but m=" + std::to_string(study.m()) +
                                      " exceeds the closure cap of " + std::to_string(config.closure_cap));
            }
            if (csv) {
                std::cout << "size,d,alpha,method,engine\n"
                          << set.size() << ',' << result.d << ',' << num(alpha) << ',' << method << ','
                          << engine << '\n';
            } else {
                std::cout << "size=" << set.size() << " d=" << result.d << " alpha=" << num(alpha)
                          << " method=" << method << " engine=" << engine << '\n';
            }
        } else if (*closure_cmd) {
            const auto study = ct::load_study(study_path);
            ct::AnalysisConfig config{alpha, ct::parse_local_test(method), closure_cap};
            const auto closure = ct::full_closure(study, config);
            const auto family = ct::defining_family(closure);
            ct::save_family(defining_out, family, study.labels());
            if (csv) {
                std::cout << "m,rejected,defining_sets,alpha,method\n"
                          << study.m() << ',' << closure.rejected_count() << ',' << family.size() << ','
                          << num(alpha) << ',' << method << '\n';
            } else {
                std::cout << "m=" << study.m() << " rejected=" << closure.rejected_count()
                          << " defining_sets=" << family.size() << " alpha=" << num(alpha)
                          << " method=" << method << '\n';
            }
        } else if (*dual_cmd) {
            std::vector<std::string> universe;
            if (!study_path.empty()) {
                const auto study = ct::load_study(study_path);
                universe.assign(study.labels().begin(), study.labels().end());
            }
            const auto labeled = ct::load_family(family_path, universe);
            const auto& labels = labeled.labels;
            const auto dual = ct::minimal_transversals(labeled.family, emit_cap);

            auto emit_family = [&](std::string_view section, const ct::SetFamily& f) {
                if (!csv) std::cout << section << ":\n";
                for (const auto& s : f.sets()) {
                    if (csv)
                        std::cout << section << ',' << joined(s, labels, ';') << '\n';
                    else
                        std::cout << ct::format_set(s, labels) << '\n';
                }
            };
            if (csv) std::cout << "section,set\n";
            emit_family("transversals", dual.transversals);
            if (dual.truncated) std::cout << (csv ? "truncated,true\n" : "truncated=true\n");
            if (*known_opt) {
                std::vector<std::size_t> known;
                std::size_t pos = 0;
                while (pos <= known_text.size()) {
                    auto next = known_text.find(',', pos);
                    if (next == std::string::npos) next = known_text.size();
                    std::string label = known_text.substr(pos, next - pos);
                    pos = next + 1;
                    if (label.empty()) continue;
                    const auto it = std::find(labels.begin(), labels.end(), label);
                    if (it == labels.end()) throw ct::ValidationError("unknown label " + label, "known-null");
                    const auto idx = static_cast<std::size_t>(it - labels.begin());
                    if (std::find(known.begin(), known.end(), idx) == known.end()) known.push_back(idx);
                }
                const auto conditioned =
                    ct::condition_on_nulls(dual.transversals, ct::HypothesisSet(known, labels.size()));
                emit_family("surviving", conditioned.surviving);
                if (csv)
                    std::cout << "implicated," << joined(conditioned.implicated, labels, ';') << '\n';
                else
                    std::cout << "implicated=" << ct::format_set(conditioned.implicated, labels) << '\n';
            }
        } else if (*mr_cmd) {
            const auto study = ct::load_study(study_path);
            ct::validate_alpha(alpha);
            const auto config = cache_path.empty()
                                    ? ct::calibrate_lambda(study.m(), alpha, calib_reps, seed)
                                    : ct::CalibrationCache(cache_path).lambda(study.m(), alpha, calib_reps, seed);
            const auto bound = ct::mr_lower_bound(study, config);
            if (csv)
                std::cout << "mr_bound,lambda,alpha,m\n"
                          << bound << ',' << num(config.lambda) << ',' << num(alpha) << ',' << study.m() << '\n';
            else
                std::cout << "mr_bound=" << bound << " lambda=" << num(config.lambda) << " alpha=" << num(alpha)
                          << " m=" << study.m() << '\n';
        } else if (*hc_cmd) {
            const auto study = ct::load_study(study_path);
            const double hc = ct::higher_criticism(study);
            std::optional<double> critical;
            if (*hc_alpha) {
                ct::validate_alpha(alpha);
                critical = cache_path.empty() ? ct::hc_critical_value(study.m(), alpha, hc_reps, seed)
                                              : ct::CalibrationCache(cache_path).hc_critical(study.m(), alpha, hc_reps, seed);
            }
            if (csv) {
                std::cout << "hc" << (critical ? ",critical,alpha,reject" : "") << '\n' << num(hc);
                if (critical) std::cout << ',' << num(*critical) << ',' << num(alpha) << ',' << (hc > *critical ? "true" : "false");
                std::cout << '\n';
            } else {
                std::cout << "hc=" << num(hc);
                if (critical)
                    std::cout << " critical=" << num(*critical) << " alpha=" << num(alpha)
                              << " reject=" << (hc > *critical ? "true" : "false");
                std::cout << '\n';
            }
        } else if (*sim_cmd) {
            if (sim_m == 0) throw ct::ConfigError("--m must be positive");
            if (n_false_opt->count() == 0) n_false = std::min<std::size_t>(n_false, sim_m);
            if (n_false > sim_m) throw ct::ConfigError("--n-false exceeds --m");
            if (!(scale > 0.0 && scale <= 1.0)) throw ct::ConfigError("--scale must lie in (0,1]");
            auto stream = ct::derive_stream(seed, stream_id);
            ct::save_study(out_path, ct::simulate_study(sim_m, n_false, scale, stream));
            std::cout << "m=" << sim_m << " n_false=" << n_false << " out=" << out_path << '\n';
        } else if (*power_cmd) {
            const auto scenario = ct::PowerScenario::from_config(
                config_path.empty() ? ct::KeyValueConfig{} : ct::load_key_value(config_path));
            const auto rows = ct::run_power_experiment(scenario);
            std::ofstream out(out_path);
            if (!out) throw ct::ConfigError("cannot write " + out_path);
            ct::write_power_csv(out, scenario, rows);
            std::cout << "rows=" << rows.size() << " out=" << out_path << '\n';
        } else if (*bench_cmd) {
            const auto scenario = ct::TimingScenario::from_config(
                config_path.empty() ? ct::KeyValueConfig{} : ct::load_key_value(config_path));
            const auto rows = ct::run_timing_experiment(scenario);
            std::ofstream out(out_path);
            if (!out) throw ct::ConfigError("cannot write " + out_path);
            ct::write_timing_csv(out, scenario, rows);
            std::cout << "rows=" << rows.size() << " out=" << out_path << '\n';
        } else if (*serve_cmd) {
            ct::SessionService::Options options;
            options.max_sessions = max_sessions;
            options.closure_cap = closure_cap;
            if (!study_dir.empty()) options.study_dir = study_dir;
            ct::SessionService service(options);
            httplib::Server server;
            service.mount(server, ui_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(ui_dir));
            g_server = &server;
            std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
            std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
            std::cerr << "listening on http://" << host << ':' << port << '\n';
            if (!server.listen(host, port)) throw ct::ConfigError("cannot bind " + host + ":" + std::to_string(port));
        }
    } catch (const ct::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ct::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ct::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ct::ContractViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
