// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eprlab/bell.hpp"
#include "eprlab/errors.hpp"
#include "eprlab/montecarlo.hpp"
#include "eprlab/quadrature.hpp"

namespace eprlab {

enum class RunMode { analytic, montecarlo, coincidence };

inline std::string_view mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::analytic: return "analytic";
        case RunMode::montecarlo: return "montecarlo";
        case RunMode::coincidence: return "coincidence";
    }
    return "unknown";
}

/// Evenly spaced grid of setting differences, millidegree-encoded like all
/// external angle values.
struct DeltaGrid {
    std::int64_t start_mdeg = 0;
    std::int64_t stop_mdeg = 180000;
    int count = 65;

    std::vector<double> radians() const {
        std::vector<double> grid(count);
        for (int i = 0; i < count; ++i) {
            const double mdeg =
                count == 1 ? static_cast<double>(start_mdeg)
                           : static_cast<double>(start_mdeg) +
                                 static_cast<double>(stop_mdeg - start_mdeg) * i / (count - 1);
            grid[i] = mdeg * kPi / 180.0e3;
        }
        return grid;
    }
};

/// One self-contained experiment description: which models or sampling
/// regime to run, the run plan, the coincidence sweep, and where output
/// goes. Loaded from JSON; unknown keys are rejected.
struct Scenario {
    std::string name = "unnamed";
    RunMode mode = RunMode::analytic;
    std::vector<ModelKind> models;

    std::uint64_t pairs = 0;
    std::uint64_t seed = 0;
    double source_rate_hz = 1.0e6;
    SamplingRegime regime = SamplingRegime::joint;
    std::int64_t phi0_mdeg = 0;
    std::vector<std::int64_t> station1_settings_mdeg{0};
    std::vector<std::int64_t> station2_settings_mdeg{0};
    double arm_delay_1_ns = 0.0;
    double arm_delay_2_ns = 0.0;
    bool tag_pairs = true;
    double jitter_sigma_ns = 0.0;
    std::vector<std::int64_t> window_sweep_ns;
    DeltaGrid delta_grid{};
    QuadratureSettings quadrature{};
    int workers = 1;
    std::string preset;  ///< optional named angle preset filling the stations
    std::string output_dir = "out";

    SetupOffset offset() const {
        return SetupOffset{static_cast<double>(phi0_mdeg) * kPi / 180.0e3};
    }

    RunPlan to_run_plan() const {
        RunPlan plan;
        plan.pair_count = pairs;
        plan.seed = seed;
        plan.source_rate = source_rate_hz;
        plan.regime = regime;
        plan.offset = offset();
        plan.tag_pairs = tag_pairs;
        plan.station_1 = StationConfig{1, {settings(station1_settings_mdeg)}, arm_delay_1_ns * 1e-9};
        plan.station_2 = StationConfig{2, {settings(station2_settings_mdeg)}, arm_delay_2_ns * 1e-9};
        return plan;
    }

    static std::vector<Angle> settings(const std::vector<std::int64_t>& mdeg) {
        std::vector<Angle> angles;
        angles.reserve(mdeg.size());
        for (const auto m : mdeg) angles.push_back(Angle::from_millidegrees(m));
        return angles;
    }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                                const std::string& path) {
    for (const auto& [key, value] : object.items()) {
        if (!known.contains(key)) {
            throw SchemaError("scenario: unknown key \"" + (path.empty() ? key : path + "." + key) +
                              "\"");
        }
    }
}

template <typename T>
T get_or(const json& object, const std::string& key, const T& fallback, const std::string& path) {
    if (!object.contains(key)) return fallback;
    try {
        return object.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError("scenario: field \"" + (path.empty() ? key : path + "." + key) +
                          "\" has the wrong type");
    }
}

/// Unsigned fields need an explicit sign check: the JSON layer would
/// happily wrap a negative integer around.
inline std::uint64_t get_unsigned_or(const json& object, const std::string& key,
                                     std::uint64_t fallback) {
    if (!object.contains(key)) return fallback;
    if (!object.at(key).is_number_unsigned()) {
        throw SchemaError("scenario: field \"" + key + "\" must be a nonnegative integer");
    }
    return object.at(key).get<std::uint64_t>();
}

inline ModelKind parse_model(const std::string& name) {
    if (name == "single-photon") return ModelKind::single_photon;
    if (name == "phase-linked") return ModelKind::phase_linked;
    if (name == "furry") return ModelKind::furry;
    if (name == "lhv") return ModelKind::lhv;
    throw SchemaError("scenario: unknown model \"" + name + "\"");
}

inline void locate(const std::string& text, std::size_t byte, std::size_t& line,
                   std::size_t& column) {
    line = 1;
    column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
}

}  // namespace detail

/// Parse a scenario from JSON text. Unknown keys are rejected with the
/// offending key named; schema violations name the field path; parse
/// errors carry line and column.
inline Scenario parse_scenario(const std::string& text) {
    using detail::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 0;
        std::size_t column = 0;
        detail::locate(text, e.byte > 0 ? e.byte - 1 : 0, line, column);
        throw SchemaError("scenario: parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(column));
    }
    if (!root.is_object()) throw SchemaError("scenario: top level must be a JSON object");

    static const std::set<std::string> known_top = {
        "name",           "mode",          "models",          "pairs",
        "seed",           "source_rate_hz", "regime",         "phi0_mdeg",
        "station_1",      "station_2",     "tag_pairs",       "jitter_sigma_ns",
        "window_sweep_ns", "delta_grid",   "quadrature",      "workers",
        "preset",         "output_dir"};
    detail::reject_unknown_keys(root, known_top, "");

    Scenario sc;
    sc.name = detail::get_or<std::string>(root, "name", sc.name, "");

    const std::string mode = detail::get_or<std::string>(root, "mode", "analytic", "");
    if (mode == "analytic") {
        sc.mode = RunMode::analytic;
    } else if (mode == "montecarlo") {
        sc.mode = RunMode::montecarlo;
    } else if (mode == "coincidence") {
        sc.mode = RunMode::coincidence;
    } else {
        throw SchemaError("scenario: field \"mode\" must be analytic, montecarlo or coincidence");
    }

    if (root.contains("models")) {
        if (!root["models"].is_array()) throw SchemaError("scenario: field \"models\" must be an array");
        for (const auto& entry : root["models"]) {
            if (!entry.is_string()) throw SchemaError("scenario: field \"models\" must hold strings");
            sc.models.push_back(detail::parse_model(entry.get<std::string>()));
        }
    }

    sc.pairs = detail::get_unsigned_or(root, "pairs", sc.pairs);
    sc.seed = detail::get_unsigned_or(root, "seed", sc.seed);
    sc.source_rate_hz = detail::get_or<double>(root, "source_rate_hz", sc.source_rate_hz, "");
    sc.phi0_mdeg = detail::get_or<std::int64_t>(root, "phi0_mdeg", sc.phi0_mdeg, "");
    sc.tag_pairs = detail::get_or<bool>(root, "tag_pairs", sc.tag_pairs, "");
    sc.jitter_sigma_ns = detail::get_or<double>(root, "jitter_sigma_ns", sc.jitter_sigma_ns, "");
    sc.workers = detail::get_or<int>(root, "workers", sc.workers, "");
    sc.preset = detail::get_or<std::string>(root, "preset", sc.preset, "");
    sc.output_dir = detail::get_or<std::string>(root, "output_dir", sc.output_dir, "");

    const std::string regime =
        detail::get_or<std::string>(root, "regime", "joint", "");
    if (regime == "joint") {
        sc.regime = SamplingRegime::joint;
    } else if (regime == "factorized-local") {
        sc.regime = SamplingRegime::factorized_local;
    } else {
        throw SchemaError("scenario: field \"regime\" must be joint or factorized-local");
    }

    for (const char* station_key : {"station_1", "station_2"}) {
        if (!root.contains(station_key)) continue;
        const json& station = root[station_key];
        if (!station.is_object()) {
            throw SchemaError(std::string("scenario: field \"") + station_key +
                              "\" must be an object");
        }
        detail::reject_unknown_keys(station, {"settings_mdeg", "arm_delay_ns"}, station_key);
        auto& settings = station_key == std::string("station_1") ? sc.station1_settings_mdeg
                                                                 : sc.station2_settings_mdeg;
        auto& delay = station_key == std::string("station_1") ? sc.arm_delay_1_ns
                                                              : sc.arm_delay_2_ns;
        settings = detail::get_or<std::vector<std::int64_t>>(station, "settings_mdeg", settings,
                                                             station_key);
        delay = detail::get_or<double>(station, "arm_delay_ns", delay, station_key);
        if (settings.empty()) {
            throw SchemaError(std::string("scenario: field \"") + station_key +
                              ".settings_mdeg\" must be nonempty");
        }
    }

    if (root.contains("window_sweep_ns")) {
        sc.window_sweep_ns = detail::get_or<std::vector<std::int64_t>>(
            root, "window_sweep_ns", sc.window_sweep_ns, "");
        for (const auto w : sc.window_sweep_ns) {
            if (w <= 0) throw SchemaError("scenario: field \"window_sweep_ns\" must be positive");
        }
    }

    if (root.contains("delta_grid")) {
        const json& grid = root["delta_grid"];
        if (!grid.is_object()) throw SchemaError("scenario: field \"delta_grid\" must be an object");
        detail::reject_unknown_keys(grid, {"start_mdeg", "stop_mdeg", "count"}, "delta_grid");
        sc.delta_grid.start_mdeg =
            detail::get_or<std::int64_t>(grid, "start_mdeg", sc.delta_grid.start_mdeg, "delta_grid");
        sc.delta_grid.stop_mdeg =
            detail::get_or<std::int64_t>(grid, "stop_mdeg", sc.delta_grid.stop_mdeg, "delta_grid");
        sc.delta_grid.count = detail::get_or<int>(grid, "count", sc.delta_grid.count, "delta_grid");
        if (sc.delta_grid.count < 1) {
            throw SchemaError("scenario: field \"delta_grid.count\" must be >= 1");
        }
    }

    if (root.contains("quadrature")) {
        const json& quad = root["quadrature"];
        if (!quad.is_object()) throw SchemaError("scenario: field \"quadrature\" must be an object");
        detail::reject_unknown_keys(quad, {"nodes", "rule"}, "quadrature");
        sc.quadrature.node_count =
            detail::get_or<int>(quad, "nodes", sc.quadrature.node_count, "quadrature");
        const std::string rule =
            detail::get_or<std::string>(quad, "rule", "trapezoid-periodic", "quadrature");
        if (rule == "trapezoid-periodic") {
            sc.quadrature.rule = QuadratureRule::trapezoid_periodic;
        } else if (rule == "gauss-legendre") {
            sc.quadrature.rule = QuadratureRule::gauss_legendre;
        } else {
            throw SchemaError(
                "scenario: field \"quadrature.rule\" must be trapezoid-periodic or gauss-legendre");
        }
    }

    if (!sc.preset.empty()) {
        const AnglePreset* preset = find_preset(sc.preset);
        if (preset == nullptr) {
            throw SchemaError("scenario: unknown preset \"" + sc.preset + "\"");
        }
        sc.station1_settings_mdeg = {preset->angles[0].millidegrees(),
                                     preset->angles[1].millidegrees()};
        sc.station2_settings_mdeg = {preset->angles[2].millidegrees(),
                                     preset->angles[3].millidegrees()};
    }

    // mode-specific requirements
    if (sc.mode == RunMode::analytic && sc.models.empty()) {
        throw SchemaError("scenario: analytic mode needs a nonempty \"models\" list");
    }
    if (sc.mode == RunMode::montecarlo || sc.mode == RunMode::coincidence) {
        if (sc.pairs == 0) throw SchemaError("scenario: field \"pairs\" must be >= 1 for this mode");
        if (!(sc.source_rate_hz > 0.0)) {
            throw SchemaError("scenario: field \"source_rate_hz\" must be > 0");
        }
    }
    if (sc.mode == RunMode::coincidence && sc.window_sweep_ns.empty()) {
        throw SchemaError("scenario: coincidence mode needs a nonempty \"window_sweep_ns\"");
    }
    if (sc.workers < 1) throw SchemaError("scenario: field \"workers\" must be >= 1");
    try {
        validate(sc.quadrature);
    } catch (const ConfigError& e) {
        throw SchemaError(std::string("scenario: ") + e.what());
    }
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

/// Scenario echo used inside summaries and the run manifest.
inline nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json station_1{{"settings_mdeg", sc.station1_settings_mdeg},
                             {"arm_delay_ns", sc.arm_delay_1_ns}};
    nlohmann::json station_2{{"settings_mdeg", sc.station2_settings_mdeg},
                             {"arm_delay_ns", sc.arm_delay_2_ns}};
    std::vector<std::string> models;
    for (const auto kind : sc.models) models.emplace_back(model_name(kind));
    return nlohmann::json{
        {"name", sc.name},
        {"mode", std::string(mode_name(sc.mode))},
        {"models", models},
        {"pairs", sc.pairs},
        {"seed", sc.seed},
        {"source_rate_hz", sc.source_rate_hz},
        {"regime",
         sc.regime == SamplingRegime::joint ? "joint" : "factorized-local"},
        {"phi0_mdeg", sc.phi0_mdeg},
        {"station_1", station_1},
        {"station_2", station_2},
        {"tag_pairs", sc.tag_pairs},
        {"jitter_sigma_ns", sc.jitter_sigma_ns},
        {"window_sweep_ns", sc.window_sweep_ns},
        {"delta_grid",
         {{"start_mdeg", sc.delta_grid.start_mdeg},
          {"stop_mdeg", sc.delta_grid.stop_mdeg},
          {"count", sc.delta_grid.count}}},
        {"quadrature",
         {{"nodes", sc.quadrature.node_count},
          {"rule", sc.quadrature.rule == QuadratureRule::trapezoid_periodic ? "trapezoid-periodic"
                                                                            : "gauss-legendre"}}},
        {"workers", sc.workers},
        {"preset", sc.preset},
        {"output_dir", sc.output_dir}};
}

}  // namespace eprlab
