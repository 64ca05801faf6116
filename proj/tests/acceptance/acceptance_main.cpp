// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: every release criterion as one pass/fail line.
// Run with no arguments for the full suite, or name criteria (A1 .. A8).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eprlab/bell.hpp"
#include "eprlab/coincidence.hpp"
#include "eprlab/correlation.hpp"
#include "eprlab/montecarlo.hpp"
#include "eprlab/polarization.hpp"
#include "eprlab/runner.hpp"
#include "eprlab/scenario.hpp"

namespace {

using namespace eprlab;

struct CriterionResult {
    bool pass = false;
    std::string detail;
};

CriterionResult pass(const std::string& detail) { return {true, detail}; }
CriterionResult fail(const std::string& detail) { return {false, detail}; }

std::string fmt(double value, int precision = 9) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    return buf;
}

// A1: quadrature ratio integral equals (1/2) sin^2(phi) on a 64-point grid
// within 1e-9, in under a second.
CriterionResult a1_quadrature_oracle() {
    const auto start = std::chrono::steady_clock::now();
    const QuadratureSettings quad{512, QuadratureRule::trapezoid_periodic};
    double worst = 0.0;
    for (int k = 0; k < 64; ++k) {
        const double phi = kTwoPi * k / 64.0;
        const double s = std::sin(phi);
        worst = std::max(worst, std::fabs(kracklauer_normalized(phi, quad) - 0.5 * s * s));
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (worst >= 1e-9) return fail("max |quadrature - closed form| = " + fmt(worst));
    if (elapsed >= 1.0) return fail("took " + fmt(elapsed, 3) + " s, budget 1 s");
    return pass("max deviation " + fmt(worst) + " over 64 phases, " + fmt(elapsed * 1e3, 3) +
                " ms");
}

// A2: 0/45/90 cascade transmits 0.25 of the post-first-polarizer intensity,
// 0/90 transmits 0; both to 1e-12.
CriterionResult a2_cascade() {
    const double diagonal = cascade_intensity_fraction(
        {Angle{0.0}, {Angle{0.0}, Angle{0.25 * kPi}, Angle{0.5 * kPi}}});
    const double crossed =
        cascade_intensity_fraction({Angle{0.0}, {Angle{0.0}, Angle{0.5 * kPi}}});
    if (std::fabs(diagonal - 0.25) >= 1e-12) return fail("0/45/90 -> " + fmt(diagonal, 17));
    if (std::fabs(crossed) >= 1e-12) return fail("0/90 -> " + fmt(crossed, 17));
    return pass("0/45/90 -> " + fmt(diagonal, 12) + ", 0/90 -> " + fmt(crossed, 12));
}

// A3: mixed-pair visibility 0.500 and phase-linked visibility 1.000, each
// within 1e-6, both curves evaluated by quadrature.
CriterionResult a3_visibility_contrast() {
    std::vector<double> grid(65);
    for (int i = 0; i < 65; ++i) grid[i] = kPi * i / 64.0;
    const QuadratureSettings quad{512, QuadratureRule::trapezoid_periodic};
    const double v_furry = model_curve(ModelKind::furry, grid, {}, quad).visibility();
    CorrelationCurve linked;
    for (const double delta : grid) {
        const auto integral = phase_linked_integral(Angle{0.0}, Angle{delta}, {}, quad);
        linked.points.push_back({delta, integral.real_part, 0.0, 0});
    }
    const double v_linked = linked.visibility();
    if (std::fabs(v_furry - 0.5) >= 1e-6) return fail("mixed-pair visibility " + fmt(v_furry, 12));
    if (std::fabs(v_linked - 1.0) >= 1e-6) {
        return fail("phase-linked visibility " + fmt(v_linked, 12));
    }
    return pass("mixed-pair " + fmt(v_furry, 8) + ", phase-linked " + fmt(v_linked, 8));
}

// A4: joint-regime CHSH at the weihs-style preset, one million pairs,
// fixed seed: S within 0.01 of 2*sqrt(2); factorized regime stays under
// 2 + 3 sigma. Everything inside a 30 s budget.
CriterionResult a4_chsh() {
    const auto start = std::chrono::steady_clock::now();
    const auto preset = *find_preset("weihs-style");
    RunPlan plan;
    plan.pair_count = 1000000;
    plan.seed = 7;
    plan.regime = SamplingRegime::joint;
    plan.station_1.schedule.choices = {preset.angles[0], preset.angles[1]};
    plan.station_2.schedule.choices = {preset.angles[2], preset.angles[3]};

    const auto joint_estimates = estimates_from_experiment(run_experiment(plan, 2));
    const ChshResult joint = chsh_from_estimates(joint_estimates, preset.angles[0],
                                                 preset.angles[1], preset.angles[2],
                                                 preset.angles[3]);
    plan.regime = SamplingRegime::factorized_local;
    const auto local_estimates = estimates_from_experiment(run_experiment(plan, 2));
    const ChshResult local = chsh_from_estimates(local_estimates, preset.angles[0],
                                                 preset.angles[1], preset.angles[2],
                                                 preset.angles[3]);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const double target = 2.0 * std::sqrt(2.0);
    if (std::fabs(joint.s_value - target) >= 0.01) {
        return fail("joint S = " + fmt(joint.s_value, 8) + ", want " + fmt(target, 8) + " +- 0.01");
    }
    if (local.s_value > 2.0 + 3.0 * local.std_error) {
        return fail("factorized S = " + fmt(local.s_value, 8) + " above 2 + 3 sigma");
    }
    if (elapsed >= 30.0) return fail("took " + fmt(elapsed, 3) + " s, budget 30 s");
    return pass("joint S = " + fmt(joint.s_value, 6) + " +- " + fmt(joint.std_error, 3) +
                ", factorized S = " + fmt(local.s_value, 6) + ", " + fmt(elapsed, 3) + " s");
}

// A5: the conditional single-photon probability is exactly twice the pair
// law at zero offset, over ten thousand random setting pairs, to 1e-12.
CriterionResult a5_factor_of_two() {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const Angle alpha{uniform(rng)};
        const Angle beta{uniform(rng)};
        worst = std::max(worst, std::fabs(conditional_probability(alpha, beta) -
                                          2.0 * phase_linked_probability(alpha, beta)));
    }
    if (worst >= 1e-12) return fail("max deviation " + fmt(worst));
    return pass("max deviation " + fmt(worst) + " over 10000 random setting pairs");
}

// A6: window sweep with a fixed seed: accidental fraction never decreases,
// untagged visibility never increases; wherever the accidental fraction is
// below 1% the untagged visibility sits within 0.02 of the tagged one; and
// at the widest window the untagged curve matches the mixture law
// (1 - f) * true curve + f * independent singles within 3 sigma per bin.
CriterionResult a6_mixing_dilution() {
    Scenario sc = parse_scenario(
        R"({"name": "a6", "mode": "coincidence", "pairs": 200000, "seed": 20260808,
            "source_rate_hz": 1e6, "jitter_sigma_ns": 4.0,
            "station_1": {"settings_mdeg": [0]},
            "station_2": {"settings_mdeg": [0, 30000, 60000, 90000]},
            "window_sweep_ns": [10, 32, 100, 316, 1000, 3162, 10000]})");
    const RunPlan plan = sc.to_run_plan();
    ExperimentResult streams = run_experiment(plan, 2);
    const JitterModel jitter{sc.jitter_sigma_ns * 1e-9};
    streams.station_1 = apply_jitter(std::move(streams.station_1), jitter, sc.seed, Stream::jitter_1);
    streams.station_2 = apply_jitter(std::move(streams.station_2), jitter, sc.seed, Stream::jitter_2);

    const std::vector<double> deltas = schedule_deltas(sc);
    std::vector<double> fractions;
    std::vector<double> untagged_vis;
    std::vector<double> tagged_vis;
    std::vector<CoincidencePair> widest;
    for (const auto window_ns : sc.window_sweep_ns) {
        const auto matches = match_coincidences(streams.station_1, streams.station_2,
                                                {static_cast<double>(window_ns) * 1e-9});
        fractions.push_back(accidental_fraction(matches));
        untagged_vis.push_back(data_curve(matches, deltas, false).visibility());
        tagged_vis.push_back(data_curve(matches, deltas, true).visibility());
        if (window_ns == sc.window_sweep_ns.back()) widest = matches;
    }

    std::ostringstream sweep_text;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        sweep_text << (k ? " " : "") << fmt(fractions[k], 3);
    }
    for (std::size_t k = 1; k < fractions.size(); ++k) {
        if (fractions[k] + 1e-12 < fractions[k - 1]) {
            return fail("accidental fraction not monotone: " + sweep_text.str());
        }
        if (untagged_vis[k] > untagged_vis[k - 1] + 1e-12) {
            return fail("untagged visibility increased at window " +
                        std::to_string(sc.window_sweep_ns[k]) + " ns");
        }
    }
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        if (fractions[k] < 0.01 &&
            std::fabs(untagged_vis[k] - tagged_vis[k]) > 0.02) {
            return fail("visibility gap " + fmt(std::fabs(untagged_vis[k] - tagged_vis[k]), 4) +
                        " at accidental fraction " + fmt(fractions[k], 4));
        }
    }

    // mixture law at the widest window
    const double f = accidental_fraction(widest);
    if (!(f > 0.0)) return fail("widest window produced no accidentals to test");
    std::uint64_t plus_1 = 0;
    std::uint64_t plus_2 = 0;
    for (const auto& record : streams.station_1) plus_1 += record.outcome > 0;
    for (const auto& record : streams.station_2) plus_2 += record.outcome > 0;
    const double singles_product =
        (static_cast<double>(plus_1) / streams.station_1.size()) *
        (static_cast<double>(plus_2) / streams.station_2.size());
    for (const double delta : deltas) {
        const auto delta_mdeg = Angle{delta}.millidegrees();
        std::uint64_t n_bin = 0;
        std::uint64_t c_bin = 0;
        std::uint64_t n_true = 0;
        std::uint64_t c_true = 0;
        for (const auto& pair : widest) {
            const auto pair_delta = (pair.record_2.setting.millidegrees() -
                                     pair.record_1.setting.millidegrees() + 180000) %
                                    180000;
            if (pair_delta != delta_mdeg) continue;
            const bool coincident = pair.record_1.outcome > 0 && pair.record_2.outcome > 0;
            ++n_bin;
            c_bin += coincident;
            if (*pair.is_true_pair) {
                ++n_true;
                c_true += coincident;
            }
        }
        const std::uint64_t n_acc = n_bin - n_true;
        if (n_bin == 0 || n_true == 0 || n_acc == 0) {
            return fail("empty mixture bin at delta " + std::to_string(delta_mdeg) + " mdeg");
        }
        const double p_untagged = static_cast<double>(c_bin) / n_bin;
        const double p_true = static_cast<double>(c_true) / n_true;
        const double f_bin = static_cast<double>(n_acc) / n_bin;
        const double predicted = (1.0 - f) * p_true + f * singles_product;
        const double variance =
            f_bin * f_bin * singles_product * (1.0 - singles_product) / n_acc +
            (p_true - singles_product) * (p_true - singles_product) * f * (1.0 - f) / n_bin;
        const double sigma = std::sqrt(variance);
        if (std::fabs(p_untagged - predicted) > 3.0 * sigma + 1e-12) {
            return fail("mixture residual " + fmt(p_untagged - predicted, 4) + " vs 3 sigma = " +
                        fmt(3.0 * sigma, 4) + " at delta " + std::to_string(delta_mdeg) + " mdeg");
        }
    }
    return pass("fractions [" + sweep_text.str() + "], final visibility " +
                fmt(untagged_vis.back(), 4) + " (tagged " + fmt(tagged_vis.back(), 4) + ")");
}

// A7: default hidden-variable model: exact anticorrelation at equal
// settings, |E| <= 1 everywhere, analytic CHSH bounded by 2 within 1e-6.
CriterionResult a7_lhv_bounds() {
    const auto spec = LhvModelSpec::default_sign_model();
    for (const double a : {0.0, 0.17, 0.9, 2.2}) {
        const double e = lhv_correlation(Angle{a}, Angle{a}, spec);
        if (e != -1.0) return fail("E(a,a) = " + fmt(e, 17) + " at a = " + fmt(a, 3));
    }
    double largest = 0.0;
    for (int i = 0; i < 24; ++i) {
        for (int j = 0; j < 24; ++j) {
            const double e = lhv_correlation(Angle{kPi * i / 24.0}, Angle{kPi * j / 24.0}, spec);
            largest = std::max(largest, std::fabs(e));
        }
    }
    if (largest > 1.0 + 1e-12) return fail("|E| reached " + fmt(largest, 12));
    const auto preset = *find_preset("weihs-style");
    double worst_s = 0.0;
    for (int shift = 0; shift < 8; ++shift) {
        const double rotation = kPi * shift / 8.0;
        const ChshResult s = lhv_chsh(spec, Angle{preset.angles[0].radians() + rotation},
                                      Angle{preset.angles[1].radians() + rotation},
                                      Angle{preset.angles[2].radians() + rotation},
                                      Angle{preset.angles[3].radians() + rotation});
        worst_s = std::max(worst_s, s.s_value);
    }
    if (worst_s > 2.0 + 1e-6) return fail("analytic CHSH reached " + fmt(worst_s, 12));
    return pass("E(a,a) = -1 exactly, max |E| = " + fmt(largest, 6) + ", max S = " +
                fmt(worst_s, 8));
}

// A8: rerunning one scenario with the same seed and different worker
// counts leaves every output hash unchanged.
CriterionResult a8_determinism() {
    const char* text =
        R"({"name": "a8", "mode": "coincidence", "pairs": 30000, "seed": 88,
            "source_rate_hz": 1e6, "jitter_sigma_ns": 1.0,
            "station_1": {"settings_mdeg": [0]},
            "station_2": {"settings_mdeg": [0, 45000, 90000]},
            "window_sweep_ns": [10, 2000]})";
    const auto base = std::filesystem::temp_directory_path() / "eprlab_acceptance_a8";
    std::filesystem::remove_all(base);
    Scenario sc = parse_scenario(text);
    sc.workers = 1;
    const RunManifest serial = run(sc, base / "w1");
    const RunManifest serial_again = run(sc, base / "w1b");
    sc.workers = 2;
    const RunManifest parallel = run(sc, base / "w2");
    sc.workers = 4;
    const RunManifest oversubscribed = run(sc, base / "w4");

    for (const auto* other : {&serial_again, &parallel, &oversubscribed}) {
        if (other->outputs.size() != serial.outputs.size()) {
            return fail("output counts differ between runs");
        }
        for (std::size_t k = 0; k < serial.outputs.size(); ++k) {
            if (serial.outputs[k].file != other->outputs[k].file ||
                serial.outputs[k].sha256 != other->outputs[k].sha256) {
                return fail("hash mismatch for " + serial.outputs[k].file);
            }
        }
    }
    return pass(std::to_string(serial.outputs.size()) +
                " output hashes identical across reruns and worker counts 1, 2, 4");
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<CriterionResult()>>> criteria = {
        {"A1", a1_quadrature_oracle}, {"A2", a2_cascade},       {"A3", a3_visibility_contrast},
        {"A4", a4_chsh},              {"A5", a5_factor_of_two}, {"A6", a6_mixing_dilution},
        {"A7", a7_lhv_bounds},        {"A8", a8_determinism},
    };
    std::vector<std::string> selected;
    for (int i = 1; i < argc; ++i) selected.emplace_back(argv[i]);

    int failures = 0;
    bool matched_any = false;
    for (const auto& [id, fn] : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), id) == selected.end()) {
            continue;
        }
        matched_any = true;
        const auto start = std::chrono::steady_clock::now();
        CriterionResult result;
        try {
            result = fn();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        std::printf("%s %s  %s  (%.0f ms)\n", id.c_str(), result.pass ? "PASS" : "FAIL",
                    result.detail.c_str(), ms);
        failures += result.pass ? 0 : 1;
    }
    if (!matched_any) {
        std::fprintf(stderr, "unknown criterion; available: A1 .. A8\n");
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
