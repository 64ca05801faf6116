// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "eprlab/montecarlo.hpp"

namespace eprlab {

// Event stream interchange format: one record per line, tab-separated,
// integer-encoded fields so files are bit-exact across platforms.
//
//   # station_id	timestamp_ns	setting_mdeg	outcome	pair_id
//   1	1042	45000	-1	7
//
// The pair_id column carries the ground-truth tag and is present only
// when the run was tagged. Timestamps are nanoseconds, settings integer
// millidegrees in [0, 180000).

inline constexpr std::string_view kEventHeaderTagged =
    "# station_id\ttimestamp_ns\tsetting_mdeg\toutcome\tpair_id";
inline constexpr std::string_view kEventHeaderUntagged =
    "# station_id\ttimestamp_ns\tsetting_mdeg\toutcome";

inline std::int64_t to_nanoseconds(double seconds) {
    return static_cast<std::int64_t>(std::llround(seconds * 1e9));
}

inline double from_nanoseconds(std::int64_t ns) { return static_cast<double>(ns) * 1e-9; }

inline void write_event_stream(const std::filesystem::path& path,
                               const std::vector<DetectionRecord>& records) {
    bool tagged = !records.empty();
    for (const auto& record : records) tagged = tagged && record.pair_id.has_value();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << (tagged ? kEventHeaderTagged : kEventHeaderUntagged) << '\n';
    for (const auto& record : records) {
        out << record.station_id << '\t' << to_nanoseconds(record.timestamp) << '\t'
            << record.setting.millidegrees() << '\t' << record.outcome;
        if (tagged) out << '\t' << *record.pair_id;
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

namespace detail {

template <typename Int>
Int parse_int(std::string_view field, const char* what, std::size_t line_no) {
    Int value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw IoError(std::string("event stream: bad ") + what + " on line " +
                      std::to_string(line_no));
    }
    return value;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    while (true) {
        const std::size_t tab = line.find('\t', begin);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(begin));
            return fields;
        }
        fields.push_back(line.substr(begin, tab - begin));
        begin = tab + 1;
    }
}

}  // namespace detail

inline std::vector<DetectionRecord> read_event_stream(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string line;
    std::vector<DetectionRecord> records;
    std::size_t line_no = 0;
    bool tagged = false;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line == kEventHeaderTagged) {
                tagged = true;
            } else if (line != kEventHeaderUntagged) {
                throw IoError("event stream: unrecognized header on line " +
                              std::to_string(line_no));
            }
            saw_header = true;
            continue;
        }
        if (!saw_header) throw IoError("event stream: missing header line: " + path.string());
        const auto fields = detail::split_tabs(line);
        const std::size_t expected = tagged ? 5 : 4;
        if (fields.size() != expected) {
            throw IoError("event stream: expected " + std::to_string(expected) +
                          " fields on line " + std::to_string(line_no));
        }
        DetectionRecord record;
        record.station_id = detail::parse_int<int>(fields[0], "station_id", line_no);
        record.timestamp =
            from_nanoseconds(detail::parse_int<std::int64_t>(fields[1], "timestamp_ns", line_no));
        record.setting = Angle::from_millidegrees(
            detail::parse_int<std::int64_t>(fields[2], "setting_mdeg", line_no));
        record.outcome = detail::parse_int<int>(fields[3], "outcome", line_no);
        if (record.outcome != 1 && record.outcome != -1) {
            throw IoError("event stream: outcome must be +1 or -1 on line " +
                          std::to_string(line_no));
        }
        if (tagged) {
            record.pair_id = detail::parse_int<std::uint64_t>(fields[4], "pair_id", line_no);
        }
        records.push_back(record);
    }
    return records;
}

}  // namespace eprlab
