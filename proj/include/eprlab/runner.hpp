// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eprlab/bell.hpp"
#include "eprlab/coincidence.hpp"
#include "eprlab/event_io.hpp"
#include "eprlab/montecarlo.hpp"
#include "eprlab/scenario.hpp"
#include "eprlab/sha256.hpp"
#include "eprlab/version.hpp"

namespace eprlab {

namespace detail {

/// Shortest round-trip decimal form; keeps emitted files byte-stable.
inline std::string format_double(double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

inline std::string utc_now_iso8601() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

// Curve CSV: header "delta_mdeg,value,error", one row per grid point.
// Deltas are sweep labels, not polarizer axes, so the endpoint at 180000
// mdeg must survive the encoding un-normalized.

inline std::int64_t delta_to_millidegrees(double radians) {
    return static_cast<std::int64_t>(std::llround(radians * 180.0e3 / kPi));
}

inline void write_curve_csv(const std::filesystem::path& path, const CorrelationCurve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "delta_mdeg,value,error\n";
    for (const auto& point : curve.points) {
        out << delta_to_millidegrees(point.delta) << ',' << detail::format_double(point.value)
            << ',' << detail::format_double(point.error) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline CorrelationCurve read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "delta_mdeg,value,error") {
        throw IoError("curve csv: missing header: " + path.string());
    }
    CorrelationCurve curve;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::array<std::string, 3> fields;
        std::size_t begin = 0;
        for (int f = 0; f < 3; ++f) {
            const std::size_t comma = line.find(',', begin);
            if ((comma == std::string::npos) != (f == 2)) {
                throw IoError("curve csv: expected 3 fields on line " + std::to_string(line_no));
            }
            fields[f] = line.substr(begin, comma == std::string::npos ? comma : comma - begin);
            begin = comma + 1;
        }
        CurvePoint point;
        point.delta = static_cast<double>(std::stoll(fields[0])) * kPi / 180.0e3;
        point.value = std::stod(fields[1]);
        point.error = std::stod(fields[2]);
        curve.points.push_back(point);
    }
    return curve;
}

/// Per-combination correlation estimates from an index-aligned run (the
/// two streams of run_experiment pair up by position). Deterministic
/// ordering by millidegree-encoded settings.
inline std::vector<CorrelationEstimate> estimates_from_experiment(const ExperimentResult& result) {
    std::map<std::pair<std::int64_t, std::int64_t>, OutcomeCounts> bins;
    for (std::size_t i = 0; i < result.station_1.size(); ++i) {
        const auto& r1 = result.station_1[i];
        const auto& r2 = result.station_2[i];
        bins[{r1.setting.millidegrees(), r2.setting.millidegrees()}].add(r1.outcome, r2.outcome);
    }
    std::vector<CorrelationEstimate> estimates;
    estimates.reserve(bins.size());
    for (const auto& [key, counts] : bins) {
        estimates.push_back(estimate_correlation(Angle::from_millidegrees(key.first),
                                                 Angle::from_millidegrees(key.second), counts));
    }
    return estimates;
}

/// CHSH over the four combinations of a 2x2 switching schedule, in the
/// order (a,b), (a,b'), (a',b), (a',b').
inline ChshResult chsh_from_estimates(const std::vector<CorrelationEstimate>& estimates,
                                      Angle a, Angle a_prime, Angle b, Angle b_prime) {
    const auto find = [&](Angle s1, Angle s2) -> const CorrelationEstimate& {
        for (const auto& estimate : estimates) {
            if (estimate.setting_1.millidegrees() == s1.millidegrees() &&
                estimate.setting_2.millidegrees() == s2.millidegrees()) {
                return estimate;
            }
        }
        throw InsufficientDataError("chsh: missing setting combination (" +
                                    std::to_string(s1.millidegrees()) + " mdeg, " +
                                    std::to_string(s2.millidegrees()) + " mdeg)");
    };
    return chsh(find(a, b), find(a, b_prime), find(a_prime, b), find(a_prime, b_prime));
}

/// CHSH value a sampling regime converges to at the given combinations.
/// Joint regime: the outcome-table expectation. Factorized regime: the
/// shared-phase average of the two per-station Malus response expectations
/// (2 cos^2 - 1), evaluated by quadrature.
inline ChshResult analytic_chsh(SamplingRegime regime, SetupOffset offset, Angle a, Angle a_prime,
                                Angle b, Angle b_prime, const QuadratureSettings& q = {}) {
    const auto expectation = [&](Angle s1, Angle s2) {
        if (regime == SamplingRegime::joint) {
            return joint_outcome_table(s1, s2, offset).expectation();
        }
        return integrate(
                   [&](double lambda) {
                       return std::cos(2.0 * (lambda - s1.radians())) *
                              std::cos(2.0 * (lambda - s2.radians()));
                   },
                   0.0, kTwoPi, q) /
               kTwoPi;
    };
    return chsh(analytic_estimate(a, b, expectation(a, b)),
                analytic_estimate(a, b_prime, expectation(a, b_prime)),
                analytic_estimate(a_prime, b, expectation(a_prime, b)),
                analytic_estimate(a_prime, b_prime, expectation(a_prime, b_prime)));
}

/// CHSH of a hidden-variable model evaluated through its correlation
/// integral at the four combinations.
inline ChshResult lhv_chsh(const LhvModelSpec& spec, Angle a, Angle a_prime, Angle b,
                           Angle b_prime, const QuadratureSettings& q = {}) {
    return chsh(analytic_estimate(a, b, lhv_correlation(a, b, spec, q)),
                analytic_estimate(a, b_prime, lhv_correlation(a, b_prime, spec, q)),
                analytic_estimate(a_prime, b, lhv_correlation(a_prime, b, spec, q)),
                analytic_estimate(a_prime, b_prime, lhv_correlation(a_prime, b_prime, spec, q)));
}

struct RunOutput {
    std::string file;    ///< name relative to the output directory
    std::string sha256;  ///< content hash
};

/// Written once per run; the hashes cover every emitted file, so reruns
/// can be compared without byte-diffing the outputs themselves.
struct RunManifest {
    std::string scenario_name;
    std::uint64_t seed = 0;
    std::string version;
    std::string created_utc;
    nlohmann::json scenario_echo;
    std::vector<RunOutput> outputs;
};

/// One row of a coincidence window sweep.
struct WindowSweepRow {
    std::int64_t window_ns = 0;
    std::uint64_t matched = 0;
    double accidental_fraction = 0.0;
    double visibility_untagged = 0.0;
    double visibility_tagged = 0.0;
};

inline constexpr std::string_view kSweepCsvHeader =
    "window_ns,matched,accidental_fraction,visibility_untagged,visibility_tagged";

inline std::vector<WindowSweepRow> read_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kSweepCsvHeader) {
        throw IoError("sweep csv: missing header: " + path.string());
    }
    std::vector<WindowSweepRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::array<std::string, 5> fields;
        std::size_t begin = 0;
        for (int f = 0; f < 5; ++f) {
            const std::size_t comma = line.find(',', begin);
            if ((comma == std::string::npos) != (f == 4)) {
                throw IoError("sweep csv: expected 5 fields on line " + std::to_string(line_no));
            }
            fields[f] = line.substr(begin, comma == std::string::npos ? comma : comma - begin);
            begin = comma + 1;
        }
        WindowSweepRow row;
        row.window_ns = std::stoll(fields[0]);
        row.matched = std::stoull(fields[1]);
        row.accidental_fraction = std::stod(fields[2]);
        row.visibility_untagged = std::stod(fields[3]);
        row.visibility_tagged = std::stod(fields[4]);
        rows.push_back(row);
    }
    return rows;
}

/// Distinct setting differences (mdeg) reachable by the schedules.
inline std::vector<double> schedule_deltas(const Scenario& sc) {
    std::set<std::int64_t> deltas_mdeg;
    for (const auto s1 : sc.station1_settings_mdeg) {
        for (const auto s2 : sc.station2_settings_mdeg) {
            deltas_mdeg.insert(((s2 - s1) % 180000 + 180000) % 180000);
        }
    }
    std::vector<double> deltas;
    deltas.reserve(deltas_mdeg.size());
    for (const auto m : deltas_mdeg) deltas.push_back(Angle::from_millidegrees(m).radians());
    return deltas;
}

namespace detail {

struct OutputCollector {
    std::filesystem::path dir;
    std::vector<RunOutput> outputs;

    std::filesystem::path record(const std::string& name) {
        outputs.push_back({name, std::string()});
        return dir / name;
    }

    void finalize_hashes() {
        for (auto& output : outputs) output.sha256 = Sha256::hex_of_file(dir / output.file);
    }
};

inline void run_analytic(const Scenario& sc, OutputCollector& collector, nlohmann::json& summary) {
    const std::vector<double> grid = sc.delta_grid.radians();
    nlohmann::json visibilities = nlohmann::json::object();
    for (const ModelKind kind : sc.models) {
        const CorrelationCurve curve = model_curve(kind, grid, sc.offset(), sc.quadrature);
        const std::string file = "curve_" + std::string(model_name(kind)) + ".csv";
        write_curve_csv(collector.record(file), curve);
        visibilities[std::string(model_name(kind))] = curve.visibility();
    }
    summary["visibility"] = visibilities;
}

inline ExperimentResult simulate_streams(const Scenario& sc) {
    ExperimentResult result = run_experiment(sc.to_run_plan(), sc.workers);
    if (sc.jitter_sigma_ns > 0.0) {
        const JitterModel jitter{sc.jitter_sigma_ns * 1e-9};
        result.station_1 = apply_jitter(std::move(result.station_1), jitter, sc.seed, Stream::jitter_1);
        result.station_2 = apply_jitter(std::move(result.station_2), jitter, sc.seed, Stream::jitter_2);
    }
    return result;
}

inline nlohmann::json estimates_to_json(const std::vector<CorrelationEstimate>& estimates) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& estimate : estimates) {
        rows.push_back({{"setting1_mdeg", estimate.setting_1.millidegrees()},
                        {"setting2_mdeg", estimate.setting_2.millidegrees()},
                        {"counts",
                         {{"pp", estimate.counts.pp},
                          {"pm", estimate.counts.pm},
                          {"mp", estimate.counts.mp},
                          {"mm", estimate.counts.mm}}},
                        {"e_value", estimate.e_value},
                        {"std_error", estimate.std_error}});
    }
    return rows;
}

inline void maybe_add_chsh(const Scenario& sc, const std::vector<CorrelationEstimate>& estimates,
                           nlohmann::json& summary) {
    if (sc.station1_settings_mdeg.size() != 2 || sc.station2_settings_mdeg.size() != 2) return;
    const Angle a = Angle::from_millidegrees(sc.station1_settings_mdeg[0]);
    const Angle a_prime = Angle::from_millidegrees(sc.station1_settings_mdeg[1]);
    const Angle b = Angle::from_millidegrees(sc.station2_settings_mdeg[0]);
    const Angle b_prime = Angle::from_millidegrees(sc.station2_settings_mdeg[1]);
    try {
        const ChshResult result = chsh_from_estimates(estimates, a, a_prime, b, b_prime);
        const ChshResult model =
            analytic_chsh(sc.regime, sc.offset(), a, a_prime, b, b_prime, sc.quadrature);
        summary["chsh"] = {{"s_value", result.s_value},
                           {"std_error", result.std_error},
                           {"violated", result.violated},
                           {"violation_rule", "s_value - 2 > 3 * std_error"},
                           {"model_s_value", model.s_value}};
    } catch (const InsufficientDataError&) {
        // a short run may not populate all four combinations; skip the statistic
    }
}

inline void run_montecarlo(const Scenario& sc, OutputCollector& collector,
                           nlohmann::json& summary) {
    // estimates need the pair alignment of the raw run; jitter re-sorts
    // the streams, so it is applied only to the exported copies
    ExperimentResult result = run_experiment(sc.to_run_plan(), sc.workers);
    const std::vector<CorrelationEstimate> estimates = estimates_from_experiment(result);
    if (sc.jitter_sigma_ns > 0.0) {
        const JitterModel jitter{sc.jitter_sigma_ns * 1e-9};
        result.station_1 =
            apply_jitter(std::move(result.station_1), jitter, sc.seed, Stream::jitter_1);
        result.station_2 =
            apply_jitter(std::move(result.station_2), jitter, sc.seed, Stream::jitter_2);
    }
    write_event_stream(collector.record("events_station1.tsv"), result.station_1);
    write_event_stream(collector.record("events_station2.tsv"), result.station_2);
    summary["combinations"] = estimates_to_json(estimates);
    maybe_add_chsh(sc, estimates, summary);
}

inline void run_coincidence(const Scenario& sc, OutputCollector& collector,
                            nlohmann::json& summary) {
    const ExperimentResult result = simulate_streams(sc);
    write_event_stream(collector.record("events_station1.tsv"), result.station_1);
    write_event_stream(collector.record("events_station2.tsv"), result.station_2);

    const std::vector<double> deltas = schedule_deltas(sc);
    nlohmann::json sweep_rows = nlohmann::json::array();
    std::ofstream sweep_csv(collector.record("sweep.csv"));
    sweep_csv << kSweepCsvHeader << '\n';
    for (const auto window_ns : sc.window_sweep_ns) {
        const CoincidenceWindow window{static_cast<double>(window_ns) * 1e-9,
                                       MatchPolicy::closest_unmatched};
        const std::vector<CoincidencePair> matches =
            match_coincidences(result.station_1, result.station_2, window);
        const std::string file = "coincidences_" + std::to_string(window_ns) + "ns.tsv";
        write_coincidence_file(collector.record(file), matches);
        WindowSweepRow row;
        row.window_ns = window_ns;
        row.matched = matches.size();
        row.accidental_fraction = sc.tag_pairs ? accidental_fraction(matches) : -1.0;
        row.visibility_untagged = data_curve(matches, deltas, false).visibility();
        row.visibility_tagged =
            sc.tag_pairs ? data_curve(matches, deltas, true).visibility() : -1.0;
        sweep_csv << row.window_ns << ',' << row.matched << ','
                  << format_double(row.accidental_fraction) << ','
                  << format_double(row.visibility_untagged) << ','
                  << format_double(row.visibility_tagged) << '\n';
        sweep_rows.push_back({{"window_ns", row.window_ns},
                              {"matched", row.matched},
                              {"accidental_fraction", row.accidental_fraction},
                              {"visibility_untagged", row.visibility_untagged},
                              {"visibility_tagged", row.visibility_tagged}});
    }
    sweep_csv.close();
    summary["window_sweep"] = sweep_rows;
}

}  // namespace detail

/// Execute a scenario into out_dir and return the manifest (also written
/// as manifest.json). Identical scenario + seed produce identical output
/// hashes whatever the worker count.
inline RunManifest run(const Scenario& sc, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    detail::OutputCollector collector{out_dir, {}};

    nlohmann::json summary;
    summary["scenario"] = sc.name;
    summary["seed"] = sc.seed;
    switch (sc.mode) {
        case RunMode::analytic:
            detail::run_analytic(sc, collector, summary);
            break;
        case RunMode::montecarlo:
            detail::run_montecarlo(sc, collector, summary);
            break;
        case RunMode::coincidence:
            detail::run_coincidence(sc, collector, summary);
            break;
    }
    {
        std::ofstream out(collector.record("summary.json"));
        out << summary.dump(2) << '\n';
        if (!out) throw IoError("write failed: summary.json");
    }
    collector.finalize_hashes();

    RunManifest manifest;
    manifest.scenario_name = sc.name;
    manifest.seed = sc.seed;
    manifest.version = kVersion;
    manifest.created_utc = detail::utc_now_iso8601();
    manifest.scenario_echo = scenario_to_json(sc);
    manifest.outputs = collector.outputs;

    nlohmann::json manifest_json{{"artifact", "eprlab"},
                                 {"version", manifest.version},
                                 {"scenario", manifest.scenario_echo},
                                 {"seed", manifest.seed},
                                 {"created_utc", manifest.created_utc}};
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& output : manifest.outputs) {
        outputs.push_back({{"file", output.file}, {"sha256", output.sha256}});
    }
    manifest_json["outputs"] = outputs;
    std::ofstream out(out_dir / "manifest.json");
    out << manifest_json.dump(2) << '\n';
    if (!out) throw IoError("write failed: manifest.json");
    return manifest;
}

}  // namespace eprlab
