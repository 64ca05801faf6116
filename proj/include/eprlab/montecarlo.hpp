// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "eprlab/angle.hpp"
#include "eprlab/correlation.hpp"
#include "eprlab/errors.hpp"
#include "eprlab/rng.hpp"

namespace eprlab {

/// One emitted photon pair: identifier, emission time, and the shared
/// phase lambda the two photons carry away from the source.
struct PairEvent {
    std::uint64_t pair_id = 0;
    double emission_time = 0.0;  ///< seconds
    double lambda = 0.0;         ///< radians in [0, 2*pi)
};

/// How per-pair outcomes are drawn.
///
/// factorized_local: each station draws independently against its own
/// Malus probability cos^2(lambda - setting); the only shared input is
/// lambda. joint: both outcomes are drawn at once from the joint outcome
/// table of the phase-linked law.
enum class SamplingRegime { factorized_local, joint };

/// Per-pair polarizer setting choice: fixed when a single entry,
/// uniformly switched per pair when several.
struct SettingSchedule {
    std::vector<Angle> choices{Angle{}};

    bool fixed() const { return choices.size() == 1; }
};

struct StationConfig {
    int station_id = 1;  ///< 1 or 2
    SettingSchedule schedule{};
    double arm_delay = 0.0;  ///< seconds from emission to detection
};

struct RunPlan {
    std::uint64_t pair_count = 0;
    std::uint64_t seed = 0;
    double source_rate = 1.0e6;  ///< pairs per second
    SamplingRegime regime = SamplingRegime::joint;
    SetupOffset offset{};  ///< joint-regime law offset
    StationConfig station_1{1, {}, 0.0};
    StationConfig station_2{2, {}, 0.0};
    bool tag_pairs = true;

    void validate() const {
        if (pair_count == 0) throw ConfigError("run plan: pair_count must be >= 1");
        if (!(source_rate > 0.0)) throw ConfigError("run plan: source_rate must be > 0");
        if (station_1.schedule.choices.empty() || station_2.schedule.choices.empty()) {
            throw ConfigError("run plan: both stations need at least one setting");
        }
    }
};

/// One station outcome. +1 means transmitted, -1 absorbed. pair_id
/// carries the ground-truth tag when tagging is enabled.
struct DetectionRecord {
    int station_id = 0;
    double timestamp = 0.0;  ///< seconds
    Angle setting{};
    int outcome = +1;
    std::optional<std::uint64_t> pair_id;

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct DetectionPair {
    DetectionRecord station_1;
    DetectionRecord station_2;
};

struct MeasurementContext {
    std::uint64_t seed = 0;
    double arm_delay_1 = 0.0;
    double arm_delay_2 = 0.0;
    bool tag_pairs = true;

    std::optional<std::uint64_t> tag(const PairEvent& pair) const {
        return tag_pairs ? std::optional<std::uint64_t>(pair.pair_id) : std::nullopt;
    }
};

namespace detail {

/// Run fn(begin, end) over disjoint index ranges. The block size is fixed,
/// so the partition (and all index-addressed randomness) is independent of
/// the worker count.
template <typename Fn>
void parallel_blocks(std::uint64_t count, int workers, Fn&& fn) {
    constexpr std::uint64_t kBlock = 8192;
    if (workers <= 1 || count <= kBlock) {
        if (count > 0) fn(std::uint64_t{0}, count);
        return;
    }
    const std::uint64_t blocks = (count + kBlock - 1) / kBlock;
    std::atomic<std::uint64_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= blocks) return;
            const std::uint64_t begin = b * kBlock;
            fn(begin, std::min(count, begin + kBlock));
        }
    };
    const int pool_size = static_cast<int>(std::min<std::uint64_t>(workers, blocks));
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int t = 0; t < pool_size; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Emit pair_count events. Inter-emission gaps are exponential with mean
/// 1/source_rate, lambda is i.i.d. uniform on [0, 2*pi); both are
/// addressed by pair index, so the sequence is bit-reproducible for a
/// given seed regardless of worker count.
inline std::vector<PairEvent> generate_pairs(const RunPlan& plan, int workers = 1) {
    plan.validate();
    const double mean_gap = 1.0 / plan.source_rate;
    std::vector<PairEvent> pairs(plan.pair_count);
    detail::parallel_blocks(plan.pair_count, workers, [&](std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
            CounterRng rng(plan.seed, Stream::source, i);
            pairs[i].pair_id = i;
            pairs[i].lambda = kTwoPi * rng.next_unit();
            pairs[i].emission_time = rng.next_exponential(mean_gap);  // gap, summed below
        }
    });
    double t = 0.0;
    for (auto& pair : pairs) {
        t += pair.emission_time;
        pair.emission_time = t;
    }
    // enforce strict ordering even if a tiny gap underflows the running sum
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        if (pairs[i].emission_time <= pairs[i - 1].emission_time) {
            pairs[i].emission_time =
                std::nextafter(pairs[i - 1].emission_time, std::numeric_limits<double>::infinity());
        }
    }
    return pairs;
}

/// Factorized-local measurement: two separate draws, one per station.
inline DetectionPair measure_factorized(const PairEvent& pair, Angle setting_1, Angle setting_2,
                                        const MeasurementContext& ctx) {
    const auto respond = [&](int station, Angle setting, Stream stream, double delay) {
        CounterRng rng(ctx.seed, stream, pair.pair_id);
        const double c = std::cos(pair.lambda - setting.radians());
        const int outcome = rng.next_unit() < c * c ? +1 : -1;
        return DetectionRecord{station, pair.emission_time + delay, setting, outcome,
                               ctx.tag(pair)};
    };
    return DetectionPair{respond(1, setting_1, Stream::station_1, ctx.arm_delay_1),
                         respond(2, setting_2, Stream::station_2, ctx.arm_delay_2)};
}

/// Joint measurement: one uniform draw (station-1 substream) selects an
/// outcome pair from the joint table in the fixed cell order
/// (+,+), (+,-), (-,+), (-,-).
inline DetectionPair measure_joint(const PairEvent& pair, Angle setting_1, Angle setting_2,
                                   SetupOffset offset, const MeasurementContext& ctx) {
    CounterRng rng(ctx.seed, Stream::station_1, pair.pair_id);
    const JointOutcomeTable table = joint_outcome_table(setting_1, setting_2, offset);
    const double u = rng.next_unit();
    int o1 = -1;
    int o2 = -1;
    if (u < table.pp) {
        o1 = +1;
        o2 = +1;
    } else if (u < table.pp + table.pm) {
        o1 = +1;
        o2 = -1;
    } else if (u < table.pp + table.pm + table.mp) {
        o1 = -1;
        o2 = +1;
    }
    return DetectionPair{
        DetectionRecord{1, pair.emission_time + ctx.arm_delay_1, setting_1, o1, ctx.tag(pair)},
        DetectionRecord{2, pair.emission_time + ctx.arm_delay_2, setting_2, o2, ctx.tag(pair)}};
}

/// Both stations' record streams of one run, index-aligned by pair and
/// time-ordered per station.
struct ExperimentResult {
    std::vector<DetectionRecord> station_1;
    std::vector<DetectionRecord> station_2;
};

namespace detail {

inline std::pair<Angle, Angle> pick_settings(const RunPlan& plan, std::uint64_t pair_index) {
    CounterRng rng(plan.seed, Stream::switching, pair_index);
    const auto pick = [&](const SettingSchedule& schedule) {
        if (schedule.fixed()) return schedule.choices.front();
        return schedule.choices[rng.next_index(schedule.choices.size())];
    };
    const Angle s1 = pick(plan.station_1.schedule);
    const Angle s2 = pick(plan.station_2.schedule);
    return {s1, s2};
}

}  // namespace detail

/// Full run: generate pairs, choose per-pair settings, measure under the
/// configured regime. An empty plan yields two empty streams.
inline ExperimentResult run_experiment(const RunPlan& plan, int workers = 1) {
    ExperimentResult result;
    if (plan.pair_count == 0) return result;
    plan.validate();
    const std::vector<PairEvent> pairs = generate_pairs(plan, workers);
    result.station_1.resize(plan.pair_count);
    result.station_2.resize(plan.pair_count);
    const MeasurementContext ctx{plan.seed, plan.station_1.arm_delay, plan.station_2.arm_delay,
                                 plan.tag_pairs};
    detail::parallel_blocks(plan.pair_count, workers, [&](std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
            const auto [s1, s2] = detail::pick_settings(plan, i);
            const DetectionPair detections =
                plan.regime == SamplingRegime::factorized_local
                    ? measure_factorized(pairs[i], s1, s2, ctx)
                    : measure_joint(pairs[i], s1, s2, plan.offset, ctx);
            result.station_1[i] = detections.station_1;
            result.station_2[i] = detections.station_2;
        }
    });
    return result;
}

}  // namespace eprlab
