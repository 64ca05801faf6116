// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eprlab/runner.hpp"

using namespace eprlab;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    nlohmann::json value;
    in >> value;
    return value;
}

}  // namespace

TEST_CASE("analytic scenarios emit one curve per model plus visibilities", "[runner]") {
    Scenario sc = parse_scenario(
        R"({"name": "curves", "mode": "analytic",
            "models": ["single-photon", "phase-linked", "furry", "lhv"],
            "delta_grid": {"start_mdeg": 0, "stop_mdeg": 180000, "count": 33}})");
    const auto dir = fresh_dir("eprlab_runner_analytic");
    const auto manifest = run(sc, dir);

    REQUIRE(manifest.outputs.size() == 5);  // 4 curves + summary
    for (const char* name : {"curve_single-photon.csv", "curve_phase-linked.csv",
                             "curve_furry.csv", "curve_lhv.csv", "summary.json"}) {
        REQUIRE(std::filesystem::exists(dir / name));
    }
    const auto summary = read_json(dir / "summary.json");
    REQUIRE(summary["visibility"]["phase-linked"].get<double>() == Approx(1.0).margin(1e-9));
    REQUIRE(summary["visibility"]["furry"].get<double>() == Approx(0.5).margin(1e-9));

    // identical grids across the emitted curves
    const auto furry = read_curve_csv(dir / "curve_furry.csv");
    const auto linked = read_curve_csv(dir / "curve_phase-linked.csv");
    REQUIRE(furry.points.size() == linked.points.size());
    for (std::size_t k = 0; k < furry.points.size(); ++k) {
        REQUIRE(furry.points[k].delta == Approx(linked.points[k].delta).margin(1e-12));
    }
}

TEST_CASE("montecarlo scenarios emit parseable streams and a chsh summary", "[runner]") {
    Scenario sc = parse_scenario(
        R"({"name": "mc", "mode": "montecarlo", "pairs": 20000, "seed": 11,
            "preset": "weihs-style", "phi0_mdeg": 90000})");
    const auto dir = fresh_dir("eprlab_runner_mc");
    const auto manifest = run(sc, dir);

    const auto s1 = read_event_stream(dir / "events_station1.tsv");
    const auto s2 = read_event_stream(dir / "events_station2.tsv");
    REQUIRE(s1.size() == 20000);
    REQUIRE(s2.size() == 20000);

    const auto summary = read_json(dir / "summary.json");
    REQUIRE(summary["combinations"].size() == 4);
    const double s_value = summary["chsh"]["s_value"].get<double>();
    const double s_error = summary["chsh"]["std_error"].get<double>();
    REQUIRE(std::fabs(s_value - 2.0 * std::sqrt(2.0)) <= 4.0 * s_error);
    REQUIRE(summary["chsh"]["model_s_value"].get<double>() ==
            Approx(2.0 * std::sqrt(2.0)).margin(1e-12));

    // manifest hashes cover exactly the emitted files
    for (const auto& output : manifest.outputs) {
        REQUIRE(Sha256::hex_of_file(dir / output.file) == output.sha256);
    }
}

TEST_CASE("coincidence scenarios emit a window sweep", "[runner]") {
    Scenario sc = parse_scenario(
        R"({"name": "sweep", "mode": "coincidence", "pairs": 20000, "seed": 5,
            "source_rate_hz": 1e6, "jitter_sigma_ns": 1.0,
            "station_1": {"settings_mdeg": [0]},
            "station_2": {"settings_mdeg": [0, 30000, 60000, 90000]},
            "window_sweep_ns": [10, 1000, 10000]})");
    const auto dir = fresh_dir("eprlab_runner_sweep");
    run(sc, dir);

    for (const char* name :
         {"coincidences_10ns.tsv", "coincidences_1000ns.tsv", "coincidences_10000ns.tsv",
          "sweep.csv", "events_station1.tsv", "events_station2.tsv", "summary.json"}) {
        REQUIRE(std::filesystem::exists(dir / name));
    }
    const auto summary = read_json(dir / "summary.json");
    REQUIRE(summary["window_sweep"].size() == 3);
    double previous_fraction = -1.0;
    for (const auto& row : summary["window_sweep"]) {
        const double fraction = row["accidental_fraction"].get<double>();
        REQUIRE(fraction >= previous_fraction);
        previous_fraction = fraction;
    }
    const auto matches = read_coincidence_file(dir / "coincidences_10ns.tsv");
    REQUIRE(!matches.empty());

    // the sweep table reads back row for row
    const auto rows = read_sweep_csv(dir / "sweep.csv");
    REQUIRE(rows.size() == 3);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& row = summary["window_sweep"][k];
        REQUIRE(rows[k].window_ns == row["window_ns"].get<std::int64_t>());
        REQUIRE(rows[k].matched == row["matched"].get<std::uint64_t>());
        REQUIRE(rows[k].accidental_fraction == row["accidental_fraction"].get<double>());
        REQUIRE(rows[k].visibility_untagged == row["visibility_untagged"].get<double>());
    }
}

TEST_CASE("reruns and worker counts leave output hashes unchanged", "[runner]") {
    const char* text =
        R"({"name": "det", "mode": "coincidence", "pairs": 15000, "seed": 23,
            "source_rate_hz": 1e6, "jitter_sigma_ns": 1.0,
            "station_1": {"settings_mdeg": [0]},
            "station_2": {"settings_mdeg": [0, 45000, 90000]},
            "window_sweep_ns": [10, 2000]})";
    Scenario sc = parse_scenario(text);
    const auto first = run(sc, fresh_dir("eprlab_runner_det1"));
    const auto second = run(sc, fresh_dir("eprlab_runner_det2"));
    sc.workers = 4;
    const auto parallel = run(sc, fresh_dir("eprlab_runner_det4"));

    REQUIRE(first.outputs.size() == second.outputs.size());
    REQUIRE(first.outputs.size() == parallel.outputs.size());
    for (std::size_t k = 0; k < first.outputs.size(); ++k) {
        REQUIRE(first.outputs[k].file == second.outputs[k].file);
        REQUIRE(first.outputs[k].sha256 == second.outputs[k].sha256);
        REQUIRE(first.outputs[k].sha256 == parallel.outputs[k].sha256);
    }
}

TEST_CASE("manifest is written once with matching hashes", "[runner]") {
    Scenario sc = parse_scenario(R"({"mode": "analytic", "models": ["phase-linked"]})");
    const auto dir = fresh_dir("eprlab_runner_manifest");
    const auto manifest = run(sc, dir);
    const auto on_disk = read_json(dir / "manifest.json");
    REQUIRE(on_disk["artifact"] == "eprlab");
    REQUIRE(on_disk["outputs"].size() == manifest.outputs.size());
    for (std::size_t k = 0; k < manifest.outputs.size(); ++k) {
        REQUIRE(on_disk["outputs"][k]["file"] == manifest.outputs[k].file);
        REQUIRE(on_disk["outputs"][k]["sha256"] == manifest.outputs[k].sha256);
    }
}
