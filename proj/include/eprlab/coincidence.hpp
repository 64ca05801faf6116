// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "eprlab/errors.hpp"
#include "eprlab/event_io.hpp"
#include "eprlab/montecarlo.hpp"
#include "eprlab/rng.hpp"

namespace eprlab {

/// Which in-window partner a record takes.
enum class MatchPolicy {
    closest_unmatched,  ///< prefer the nearer candidate; ties keep the earlier one
    first_unmatched,    ///< pair heads as soon as they are inside the window
};

struct CoincidenceWindow {
    double width = 0.0;  ///< seconds, > 0
    MatchPolicy policy = MatchPolicy::closest_unmatched;
};

/// Gaussian timing smear applied per detection.
struct JitterModel {
    double sigma = 0.0;  ///< seconds, >= 0
};

struct CoincidencePair {
    DetectionRecord record_1;
    DetectionRecord record_2;
    std::optional<bool> is_true_pair;  ///< set when both records carry tags
};

/// Perturb each timestamp by an independent Gaussian draw and re-sort.
/// The draw is addressed by the record's position in the input stream, so
/// the result is reproducible for a given seed and stream id. sigma == 0
/// returns the stream untouched.
inline std::vector<DetectionRecord> apply_jitter(std::vector<DetectionRecord> stream,
                                                 const JitterModel& jitter, std::uint64_t seed,
                                                 Stream stream_id) {
    if (jitter.sigma < 0.0) throw InvalidInputError("apply_jitter: sigma must be >= 0");
    if (jitter.sigma == 0.0) return stream;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        CounterRng rng(seed, stream_id, i);
        stream[i].timestamp += rng.next_gaussian(jitter.sigma);
    }
    std::stable_sort(stream.begin(), stream.end(),
                     [](const DetectionRecord& a, const DetectionRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    return stream;
}

namespace detail {

inline void require_time_ordered(const std::vector<DetectionRecord>& stream, const char* name) {
    for (std::size_t i = 1; i < stream.size(); ++i) {
        if (stream[i].timestamp < stream[i - 1].timestamp) {
            throw InvalidInputError(std::string("match_coincidences: ") + name +
                                    " is not time-ordered");
        }
    }
}

inline CoincidencePair make_coincidence(const DetectionRecord& r1, const DetectionRecord& r2) {
    CoincidencePair pair{r1, r2, std::nullopt};
    if (r1.pair_id && r2.pair_id) pair.is_true_pair = (*r1.pair_id == *r2.pair_id);
    return pair;
}

}  // namespace detail

namespace detail {

/// Head-to-head matching: pair the two stream heads as soon as they sit
/// inside the window, otherwise drop the earlier head (nothing later on
/// the other stream can be closer to it in the forward direction once the
/// current head is already out of reach).
inline std::vector<CoincidencePair> match_first_unmatched(const std::vector<DetectionRecord>& s1,
                                                          const std::vector<DetectionRecord>& s2,
                                                          double width) {
    std::vector<CoincidencePair> matches;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < s1.size() && j < s2.size()) {
        const double dt = s2[j].timestamp - s1[i].timestamp;
        if (dt > width) {
            ++i;
        } else if (dt < -width) {
            ++j;
        } else {
            matches.push_back(make_coincidence(s1[i], s2[j]));
            ++i;
            ++j;
        }
    }
    return matches;
}

/// Closest matching: walk both streams merged in time (station 1 first on
/// equal timestamps). Each arriving record takes the latest still-unmatched
/// record of the other stream inside the window, unless the other stream's
/// next upcoming record is strictly closer, in which case it stays pending
/// and remains available. Equal distances keep the earlier candidate.
/// Pending records expire once they fall out of the window.
inline std::vector<CoincidencePair> match_closest_unmatched(const std::vector<DetectionRecord>& s1,
                                                            const std::vector<DetectionRecord>& s2,
                                                            double width) {
    std::vector<CoincidencePair> matches;
    std::deque<std::size_t> pending_1;
    std::deque<std::size_t> pending_2;
    std::size_t i = 0;
    std::size_t j = 0;
    const auto step = [&](const std::vector<DetectionRecord>& mine, std::size_t& my_next,
                          std::deque<std::size_t>& my_pending,
                          const std::vector<DetectionRecord>& theirs, std::size_t their_next,
                          std::deque<std::size_t>& their_pending, bool swap_pair) {
        const DetectionRecord& record = mine[my_next];
        while (!their_pending.empty() &&
               record.timestamp - theirs[their_pending.front()].timestamp > width) {
            their_pending.pop_front();  // expired, can never match again
        }
        const bool has_past = !their_pending.empty();
        const double past_distance =
            has_past ? record.timestamp - theirs[their_pending.back()].timestamp : 0.0;
        const bool has_future = their_next < theirs.size() &&
                                theirs[their_next].timestamp - record.timestamp <= width;
        const double future_distance =
            has_future ? theirs[their_next].timestamp - record.timestamp : 0.0;
        if (has_past && (!has_future || past_distance <= future_distance)) {
            const DetectionRecord& partner = theirs[their_pending.back()];
            their_pending.pop_back();
            matches.push_back(swap_pair ? make_coincidence(partner, record)
                                        : make_coincidence(record, partner));
        } else {
            my_pending.push_back(my_next);
        }
        ++my_next;
    };
    while (i < s1.size() || j < s2.size()) {
        const bool take_1 =
            j >= s2.size() || (i < s1.size() && s1[i].timestamp <= s2[j].timestamp);
        if (take_1) {
            step(s1, i, pending_1, s2, j, pending_2, false);
        } else {
            step(s2, j, pending_2, s1, i, pending_1, true);
        }
    }
    return matches;
}

}  // namespace detail

/// Greedy coincidence matching over two time-ordered streams, single pass,
/// policy as configured. Each record is used at most once; output is
/// ordered by the earlier timestamp of each pair.
inline std::vector<CoincidencePair> match_coincidences(const std::vector<DetectionRecord>& s1,
                                                       const std::vector<DetectionRecord>& s2,
                                                       const CoincidenceWindow& window) {
    if (!(window.width > 0.0)) {
        throw InvalidInputError("match_coincidences: window width must be > 0");
    }
    detail::require_time_ordered(s1, "stream 1");
    detail::require_time_ordered(s2, "stream 2");
    std::vector<CoincidencePair> matches =
        window.policy == MatchPolicy::first_unmatched
            ? detail::match_first_unmatched(s1, s2, window.width)
            : detail::match_closest_unmatched(s1, s2, window.width);
    std::stable_sort(matches.begin(), matches.end(),
                     [](const CoincidencePair& a, const CoincidencePair& b) {
                         return std::min(a.record_1.timestamp, a.record_2.timestamp) <
                                std::min(b.record_1.timestamp, b.record_2.timestamp);
                     });
    return matches;
}

/// Fraction of matched pairs whose records come from different emitted
/// pairs. Requires ground-truth tags on every pair.
inline double accidental_fraction(const std::vector<CoincidencePair>& pairs) {
    if (pairs.empty()) return 0.0;
    std::size_t accidental = 0;
    for (const auto& pair : pairs) {
        if (!pair.is_true_pair.has_value()) {
            throw UnsupportedAnalysisError(
                "accidental_fraction: pairs carry no ground-truth tags");
        }
        if (!*pair.is_true_pair) ++accidental;
    }
    return static_cast<double>(accidental) / static_cast<double>(pairs.size());
}

// Coincidence interchange format, tab-separated:
//   # t1_ns	t2_ns	setting1_mdeg	setting2_mdeg	outcome1	outcome2	true_pair
// true_pair is 1/0 when tags were available and -1 when unknown.

inline constexpr std::string_view kCoincidenceHeader =
    "# t1_ns\tt2_ns\tsetting1_mdeg\tsetting2_mdeg\toutcome1\toutcome2\ttrue_pair";

inline void write_coincidence_file(const std::filesystem::path& path,
                                   const std::vector<CoincidencePair>& pairs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << kCoincidenceHeader << '\n';
    for (const auto& pair : pairs) {
        const int flag = pair.is_true_pair.has_value() ? (*pair.is_true_pair ? 1 : 0) : -1;
        out << to_nanoseconds(pair.record_1.timestamp) << '\t'
            << to_nanoseconds(pair.record_2.timestamp) << '\t'
            << pair.record_1.setting.millidegrees() << '\t'
            << pair.record_2.setting.millidegrees() << '\t' << pair.record_1.outcome << '\t'
            << pair.record_2.outcome << '\t' << flag << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<CoincidencePair> read_coincidence_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string line;
    std::vector<CoincidencePair> pairs;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line != kCoincidenceHeader) {
                throw IoError("coincidence file: unrecognized header on line " +
                              std::to_string(line_no));
            }
            saw_header = true;
            continue;
        }
        if (!saw_header) throw IoError("coincidence file: missing header: " + path.string());
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 7) {
            throw IoError("coincidence file: expected 7 fields on line " +
                          std::to_string(line_no));
        }
        CoincidencePair pair;
        pair.record_1.station_id = 1;
        pair.record_2.station_id = 2;
        pair.record_1.timestamp =
            from_nanoseconds(detail::parse_int<std::int64_t>(fields[0], "t1_ns", line_no));
        pair.record_2.timestamp =
            from_nanoseconds(detail::parse_int<std::int64_t>(fields[1], "t2_ns", line_no));
        pair.record_1.setting = Angle::from_millidegrees(
            detail::parse_int<std::int64_t>(fields[2], "setting1_mdeg", line_no));
        pair.record_2.setting = Angle::from_millidegrees(
            detail::parse_int<std::int64_t>(fields[3], "setting2_mdeg", line_no));
        pair.record_1.outcome = detail::parse_int<int>(fields[4], "outcome1", line_no);
        pair.record_2.outcome = detail::parse_int<int>(fields[5], "outcome2", line_no);
        const int flag = detail::parse_int<int>(fields[6], "true_pair", line_no);
        if (flag == 0 || flag == 1) pair.is_true_pair = (flag == 1);
        pairs.push_back(pair);
    }
    return pairs;
}

}  // namespace eprlab
