// SPDX-License-Identifier: Apache-2.0
//
// eprlab: a desk-scale numerical laboratory for polarization-correlation
// experiments on photon pairs. Subcommands:
//
//   curves       analytic correlation curves for the implemented models
//   chsh         Monte Carlo CHSH run at a named angle preset
//   simulate     run a scenario file and emit event streams
//   coincidence  window matching: scenario pipeline or standalone files
//   validate     quadrature-vs-closed-form oracle suite
//
// Exit status: 0 success, 1 validation failure, 2 usage/schema error,
// 3 invalid input data, 4 insufficient data, 5 I/O error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eprlab/bell.hpp"
#include "eprlab/coincidence.hpp"
#include "eprlab/correlation.hpp"
#include "eprlab/event_io.hpp"
#include "eprlab/montecarlo.hpp"
#include "eprlab/polarization.hpp"
#include "eprlab/runner.hpp"
#include "eprlab/scenario.hpp"
#include "eprlab/version.hpp"

namespace {

using namespace eprlab;

constexpr int kExitValidationFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInvalidInput = 3;
constexpr int kExitInsufficientData = 4;
constexpr int kExitIo = 5;

struct CommonOptions {
    std::string scenario_path;
    std::string out_dir;
    std::int64_t seed = -1;  // <0: keep scenario value
    int workers = 0;         // 0: keep scenario value
};

void apply_overrides(Scenario& sc, const CommonOptions& opts) {
    if (opts.seed >= 0) sc.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.workers > 0) sc.workers = opts.workers;
    if (!opts.out_dir.empty()) sc.output_dir = opts.out_dir;
}

std::vector<ModelKind> parse_models(const std::string& list) {
    std::vector<ModelKind> models;
    std::stringstream stream(list);
    std::string token;
    while (std::getline(stream, token, ',')) {
        if (token == "single-photon") {
            models.push_back(ModelKind::single_photon);
        } else if (token == "phase-linked") {
            models.push_back(ModelKind::phase_linked);
        } else if (token == "furry") {
            models.push_back(ModelKind::furry);
        } else if (token == "lhv") {
            models.push_back(ModelKind::lhv);
        } else {
            throw SchemaError("unknown model \"" + token +
                              "\" (single-photon, phase-linked, furry, lhv)");
        }
    }
    if (models.empty()) throw SchemaError("no models given");
    return models;
}

int run_curves(const CommonOptions& opts, const std::string& model_list, int grid_count,
               std::int64_t phi0_mdeg, int nodes) {
    Scenario sc;
    if (!opts.scenario_path.empty()) {
        sc = load_scenario(opts.scenario_path);
    } else {
        sc.name = "curves";
        sc.mode = RunMode::analytic;
        sc.models = parse_models(model_list);
        sc.delta_grid.count = grid_count;
        sc.phi0_mdeg = phi0_mdeg;
        sc.quadrature.node_count = nodes;
        sc.output_dir = "out-curves";
    }
    apply_overrides(sc, opts);
    const RunManifest manifest = run(sc, sc.output_dir);
    std::cout << "wrote " << manifest.outputs.size() << " files to " << sc.output_dir << "\n";
    for (const auto& output : manifest.outputs) {
        if (output.file.rfind("curve_", 0) == 0) {
            const CorrelationCurve curve = read_curve_csv(std::filesystem::path(sc.output_dir) / output.file);
            std::printf("  %-28s visibility %.6f\n", output.file.c_str(), curve.visibility());
        }
    }
    return 0;
}

int run_chsh(const CommonOptions& opts, const std::string& preset_name, std::uint64_t pairs,
             const std::string& regime, std::int64_t phi0_mdeg, double rate_hz) {
    Scenario sc;
    if (!opts.scenario_path.empty()) {
        sc = load_scenario(opts.scenario_path);
    } else {
        sc.name = "chsh-" + preset_name;
        sc.mode = RunMode::montecarlo;
        sc.pairs = pairs;
        sc.preset = preset_name;
        sc.phi0_mdeg = phi0_mdeg;
        sc.source_rate_hz = rate_hz;
        if (regime == "joint") {
            sc.regime = SamplingRegime::joint;
        } else if (regime == "factorized-local") {
            sc.regime = SamplingRegime::factorized_local;
        } else {
            throw SchemaError("regime must be joint or factorized-local");
        }
        const AnglePreset* preset = find_preset(preset_name);
        if (preset == nullptr) throw SchemaError("unknown preset \"" + preset_name + "\"");
        sc.station1_settings_mdeg = {preset->angles[0].millidegrees(),
                                     preset->angles[1].millidegrees()};
        sc.station2_settings_mdeg = {preset->angles[2].millidegrees(),
                                     preset->angles[3].millidegrees()};
        sc.output_dir = "out-chsh";
    }
    apply_overrides(sc, opts);
    if (sc.pairs == 0 || sc.station1_settings_mdeg.size() != 2 ||
        sc.station2_settings_mdeg.size() != 2) {
        throw SchemaError("chsh needs pairs >= 1 and exactly two settings per station");
    }

    const ExperimentResult result = run_experiment(sc.to_run_plan(), sc.workers);
    const std::vector<CorrelationEstimate> estimates = estimates_from_experiment(result);
    const Angle a = Angle::from_millidegrees(sc.station1_settings_mdeg.at(0));
    const Angle a_prime = Angle::from_millidegrees(sc.station1_settings_mdeg.at(1));
    const Angle b = Angle::from_millidegrees(sc.station2_settings_mdeg.at(0));
    const Angle b_prime = Angle::from_millidegrees(sc.station2_settings_mdeg.at(1));
    const ChshResult chsh_result = chsh_from_estimates(estimates, a, a_prime, b, b_prime);
    const ChshResult model =
        analytic_chsh(sc.regime, sc.offset(), a, a_prime, b, b_prime, sc.quadrature);

    for (const auto& estimate : estimates) {
        std::printf("E(%6.2f deg, %6.2f deg) = %+.6f +- %.6f  (N = %llu)\n",
                    estimate.setting_1.degrees(), estimate.setting_2.degrees(), estimate.e_value,
                    estimate.std_error,
                    static_cast<unsigned long long>(estimate.counts.total()));
    }
    std::printf("S = %.6f +- %.6f   (model-implied S = %.6f)\n", chsh_result.s_value,
                chsh_result.std_error, model.s_value);
    std::printf("CHSH bound 2 %s at the 3-sigma level\n",
                chsh_result.violated ? "violated" : "not violated");
    if (!opts.out_dir.empty() || !opts.scenario_path.empty()) {
        run(sc, sc.output_dir);
        std::cout << "outputs in " << sc.output_dir << "\n";
    }
    return 0;
}

int run_simulate(const CommonOptions& opts, std::uint64_t pairs_override) {
    if (opts.scenario_path.empty()) throw SchemaError("simulate needs --scenario");
    Scenario sc = load_scenario(opts.scenario_path);
    if (pairs_override > 0) sc.pairs = pairs_override;
    apply_overrides(sc, opts);
    const RunManifest manifest = run(sc, sc.output_dir);
    std::cout << "scenario \"" << sc.name << "\" -> " << manifest.outputs.size() << " files in "
              << sc.output_dir << "\n";
    return 0;
}

int run_coincidence_cmd(const CommonOptions& opts, const std::string& in1, const std::string& in2,
                        std::int64_t window_ns, const std::string& policy_name) {
    if (!opts.scenario_path.empty()) {
        Scenario sc = load_scenario(opts.scenario_path);
        if (sc.mode != RunMode::coincidence) {
            throw SchemaError("coincidence: scenario mode must be \"coincidence\"");
        }
        apply_overrides(sc, opts);
        const RunManifest manifest = run(sc, sc.output_dir);
        std::cout << "scenario \"" << sc.name << "\" -> " << manifest.outputs.size()
                  << " files in " << sc.output_dir << "\n";
        return 0;
    }
    if (in1.empty() || in2.empty() || window_ns <= 0) {
        throw SchemaError("coincidence needs --scenario, or --in1/--in2/--window-ns");
    }
    CoincidenceWindow window{static_cast<double>(window_ns) * 1e-9,
                             MatchPolicy::closest_unmatched};
    if (policy_name == "first-unmatched") {
        window.policy = MatchPolicy::first_unmatched;
    } else if (policy_name != "closest-unmatched") {
        throw SchemaError("policy must be closest-unmatched or first-unmatched");
    }
    const auto s1 = read_event_stream(in1);
    const auto s2 = read_event_stream(in2);
    const auto matches = match_coincidences(s1, s2, window);
    std::printf("matched %zu coincidences (window %lld ns, %s)\n", matches.size(),
                static_cast<long long>(window_ns), policy_name.c_str());
    bool tagged = !matches.empty();
    for (const auto& pair : matches) tagged = tagged && pair.is_true_pair.has_value();
    if (tagged) {
        std::printf("accidental fraction %.6f\n", accidental_fraction(matches));
    }
    const std::filesystem::path out_dir = opts.out_dir.empty() ? "out-coincidence" : opts.out_dir;
    std::filesystem::create_directories(out_dir);
    write_coincidence_file(out_dir / "coincidences.tsv", matches);
    std::cout << "wrote " << (out_dir / "coincidences.tsv").string() << "\n";
    return 0;
}

// --- validate: oracle suite ------------------------------------------------

struct OracleRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

template <typename Fn>
OracleRow oracle_row(const std::string& name, Fn&& fn) {
    OracleRow row{name, false, ""};
    try {
        row.detail = fn();
        row.pass = true;
    } catch (const std::exception& e) {
        row.detail = e.what();
    }
    return row;
}

std::string check(bool ok, const std::string& detail) {
    if (!ok) throw std::runtime_error(detail);
    return detail;
}

int run_validate() {
    std::vector<OracleRow> rows;
    const QuadratureSettings quad{512, QuadratureRule::trapezoid_periodic};

    rows.push_back(oracle_row("ratio-integral vs closed form (64-point grid)", [&] {
        double worst = 0.0;
        for (int k = 0; k < 64; ++k) {
            const double phi = kTwoPi * k / 64.0;
            const double s = std::sin(phi);
            worst = std::max(worst, std::fabs(kracklauer_normalized(phi, quad) - 0.5 * s * s));
        }
        return check(worst < 1e-9, "max deviation " + detail::format_double(worst));
    }));

    rows.push_back(oracle_row("interference integral vs closed form (100 random)", [&] {
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const Angle alpha{uniform(rng)};
            const Angle beta{uniform(rng)};
            const SetupOffset offset{uniform(rng)};
            const auto integral = phase_linked_integral(alpha, beta, offset, quad);
            worst = std::max(worst, std::fabs(integral.real_part -
                                              phase_linked_probability(alpha, beta, offset)));
            worst = std::max(worst, std::fabs(integral.real_part + integral.imag_part - 0.5));
        }
        return check(worst < 1e-9, "max deviation " + detail::format_double(worst));
    }));

    rows.push_back(oracle_row("three-polarizer cascade 0/45/90", [&] {
        const CascadeSpec diagonal{Angle{0.0},
                                   {Angle{0.0}, Angle{0.25 * kPi}, Angle{0.5 * kPi}}};
        const CascadeSpec crossed{Angle{0.0}, {Angle{0.0}, Angle{0.5 * kPi}}};
        const double with_diagonal = cascade_intensity_fraction(diagonal);
        const double without = cascade_intensity_fraction(crossed);
        return check(std::fabs(with_diagonal - 0.25) < 1e-12 && std::fabs(without) < 1e-12,
                     "0/45/90 -> " + detail::format_double(with_diagonal) + ", 0/90 -> " +
                         detail::format_double(without));
    }));

    rows.push_back(oracle_row("mixed-pair visibility 0.5 vs phase-linked 1.0", [&] {
        std::vector<double> grid(65);
        for (int i = 0; i < 65; ++i) grid[i] = kPi * i / 64.0;
        const double v_furry = model_curve(ModelKind::furry, grid, {}, quad).visibility();
        const double v_linked = model_curve(ModelKind::phase_linked, grid, {}, quad).visibility();
        return check(std::fabs(v_furry - 0.5) < 1e-6 && std::fabs(v_linked - 1.0) < 1e-6,
                     "furry " + detail::format_double(v_furry) + ", phase-linked " +
                         detail::format_double(v_linked));
    }));

    rows.push_back(oracle_row("factor of two: conditional = 2 x pair law", [&] {
        std::mt19937_64 rng(777);
        std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
        double worst = 0.0;
        for (int k = 0; k < 10000; ++k) {
            const Angle alpha{uniform(rng)};
            const Angle beta{uniform(rng)};
            worst = std::max(worst, std::fabs(conditional_probability(alpha, beta) -
                                              2.0 * phase_linked_probability(alpha, beta)));
        }
        return check(worst < 1e-12, "max deviation " + detail::format_double(worst));
    }));

    rows.push_back(oracle_row("joint outcome table: normalization and marginals", [&] {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const auto table =
                joint_outcome_table(Angle{uniform(rng)}, Angle{uniform(rng)}, SetupOffset{uniform(rng)});
            worst = std::max({worst, std::fabs(table.sum() - 1.0),
                              std::fabs(table.marginal_plus_1() - 0.5),
                              std::fabs(table.marginal_plus_2() - 0.5)});
        }
        return check(worst < 1e-12, "max deviation " + detail::format_double(worst));
    }));

    rows.push_back(oracle_row("hidden-variable model: E(a,a) = -1, CHSH <= 2", [&] {
        const auto spec = LhvModelSpec::default_sign_model();
        const double e_equal = lhv_correlation(Angle{0.3}, Angle{0.3}, spec);
        const auto preset = *find_preset("weihs-style");
        const ChshResult s = lhv_chsh(spec, preset.angles[0], preset.angles[1], preset.angles[2],
                                      preset.angles[3]);
        return check(e_equal == -1.0 && s.s_value <= 2.0 + 1e-6,
                     "E(a,a) = " + detail::format_double(e_equal) +
                         ", S = " + detail::format_double(s.s_value));
    }));

    rows.push_back(oracle_row("seeded generation is reproducible", [&] {
        RunPlan plan;
        plan.pair_count = 1000;
        plan.seed = 42;
        const auto first = run_experiment(plan);
        const auto second = run_experiment(plan, 2);
        return check(first.station_1 == second.station_1 && first.station_2 == second.station_2,
                     "1000 pairs, worker counts 1 and 2");
    }));

    bool all_pass = true;
    for (const auto& row : rows) {
        std::printf("%-52s %s  %s\n", row.name.c_str(), row.pass ? "PASS" : "FAIL",
                    row.detail.c_str());
        all_pass = all_pass && row.pass;
    }
    return all_pass ? 0 : kExitValidationFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eprlab: polarization-correlation experiments on photon pairs"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    CommonOptions opts;

    auto* curves = app.add_subcommand("curves", "analytic correlation curves");
    std::string model_list = "single-photon,phase-linked,furry,lhv";
    int grid_count = 65;
    std::int64_t phi0_mdeg = 0;
    int nodes = 512;
    curves->add_option("--model", model_list, "comma-separated models");
    curves->add_option("--grid-count", grid_count, "delta grid size");
    curves->add_option("--phi0-mdeg", phi0_mdeg, "setup offset, millidegrees");
    curves->add_option("--nodes", nodes, "quadrature nodes");

    auto* chsh_cmd = app.add_subcommand("chsh", "Monte Carlo CHSH at an angle preset");
    std::string preset = "weihs-style";
    std::uint64_t pairs = 1000000;
    std::string regime = "joint";
    double rate_hz = 1.0e6;
    chsh_cmd->add_option("--preset", preset, "angle preset name");
    chsh_cmd->add_option("--pairs", pairs, "number of pairs");
    chsh_cmd->add_option("--regime", regime, "joint or factorized-local");
    chsh_cmd->add_option("--phi0-mdeg", phi0_mdeg, "setup offset, millidegrees");
    chsh_cmd->add_option("--rate", rate_hz, "source rate, pairs/s");

    auto* simulate = app.add_subcommand("simulate", "run a scenario file");
    std::uint64_t pairs_override = 0;
    simulate->add_option("--pairs", pairs_override, "override scenario pair count");

    auto* coincidence = app.add_subcommand("coincidence", "window matching");
    std::string in1;
    std::string in2;
    std::int64_t window_ns = 0;
    std::string policy = "closest-unmatched";
    coincidence->add_option("--in1", in1, "station-1 event stream");
    coincidence->add_option("--in2", in2, "station-2 event stream");
    coincidence->add_option("--window-ns", window_ns, "window width, nanoseconds");
    coincidence->add_option("--policy", policy, "closest-unmatched or first-unmatched");

    auto* validate_cmd = app.add_subcommand("validate", "oracle suite: quadrature vs closed forms");

    for (auto* sub : {curves, chsh_cmd, simulate, coincidence}) {
        sub->add_option("--scenario", opts.scenario_path, "scenario JSON file");
        sub->add_option("--seed", opts.seed, "override scenario seed");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--workers", opts.workers, "worker threads (must not change results)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (curves->parsed()) return run_curves(opts, model_list, grid_count, phi0_mdeg, nodes);
        if (chsh_cmd->parsed()) return run_chsh(opts, preset, pairs, regime, phi0_mdeg, rate_hz);
        if (simulate->parsed()) return run_simulate(opts, pairs_override);
        if (coincidence->parsed())
            return run_coincidence_cmd(opts, in1, in2, window_ns, policy);
        if (validate_cmd->parsed()) return run_validate();
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const UnsupportedAnalysisError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const InvalidModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
