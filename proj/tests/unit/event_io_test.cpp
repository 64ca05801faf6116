// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eprlab/event_io.hpp"
#include "eprlab/montecarlo.hpp"

using namespace eprlab;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("event streams round-trip byte-exactly", "[event_io]") {
    RunPlan plan;
    plan.pair_count = 500;
    plan.seed = 21;
    plan.regime = SamplingRegime::joint;
    plan.station_1.schedule.choices = {Angle{0.0}, Angle{0.25 * kPi}};
    plan.station_2.schedule.choices = {Angle{0.125 * kPi}};
    const auto result = run_experiment(plan);

    const auto path = temp_file("eprlab_events_tagged.tsv");
    write_event_stream(path, result.station_1);
    const auto reread = read_event_stream(path);
    REQUIRE(reread.size() == result.station_1.size());

    const auto path2 = temp_file("eprlab_events_tagged2.tsv");
    write_event_stream(path2, reread);
    REQUIRE(slurp(path) == slurp(path2));
}

TEST_CASE("untagged streams omit the pair column", "[event_io]") {
    RunPlan plan;
    plan.pair_count = 20;
    plan.seed = 3;
    plan.tag_pairs = false;
    const auto result = run_experiment(plan);
    const auto path = temp_file("eprlab_events_untagged.tsv");
    write_event_stream(path, result.station_2);

    const std::string text = slurp(path);
    REQUIRE(text.rfind(std::string(kEventHeaderUntagged), 0) == 0);

    const auto reread = read_event_stream(path);
    REQUIRE(reread.size() == 20);
    for (const auto& record : reread) REQUIRE_FALSE(record.pair_id.has_value());
}

TEST_CASE("malformed event files are reported with line numbers", "[event_io]") {
    const auto path = temp_file("eprlab_events_bad.tsv");
    {
        std::ofstream out(path);
        out << kEventHeaderUntagged << "\n";
        out << "1\tnot_a_number\t0\t1\n";
    }
    REQUIRE_THROWS_WITH(read_event_stream(path), Catch::Contains("line 2"));

    {
        std::ofstream out(path);
        out << "1\t5\t0\t1\n";  // no header
    }
    REQUIRE_THROWS_AS(read_event_stream(path), IoError);

    {
        std::ofstream out(path);
        out << kEventHeaderUntagged << "\n";
        out << "1\t5\t0\t2\n";  // outcome out of range
    }
    REQUIRE_THROWS_AS(read_event_stream(path), IoError);

    REQUIRE_THROWS_AS(read_event_stream(temp_file("eprlab_missing.tsv")), IoError);
}
