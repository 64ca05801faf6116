// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eprlab/angle.hpp"
#include "eprlab/coincidence.hpp"
#include "eprlab/correlation.hpp"
#include "eprlab/errors.hpp"
#include "eprlab/polarization.hpp"

namespace eprlab {

struct OutcomeCounts {
    std::uint64_t pp = 0;
    std::uint64_t pm = 0;
    std::uint64_t mp = 0;
    std::uint64_t mm = 0;

    std::uint64_t total() const { return pp + pm + mp + mm; }

    void add(int outcome_1, int outcome_2) {
        if (outcome_1 > 0) {
            (outcome_2 > 0 ? pp : pm) += 1;
        } else {
            (outcome_2 > 0 ? mp : mm) += 1;
        }
    }
};

/// Correlation value for one setting combination:
/// E = (N++ + N-- - N+- - N-+) / N, with the binomial standard error
/// sqrt((1 - E^2) / N).
struct CorrelationEstimate {
    Angle setting_1{};
    Angle setting_2{};
    OutcomeCounts counts{};
    double e_value = 0.0;
    double std_error = 0.0;
};

inline CorrelationEstimate estimate_correlation(Angle setting_1, Angle setting_2,
                                                const OutcomeCounts& counts) {
    const std::uint64_t n = counts.total();
    if (n == 0) {
        throw InsufficientDataError(
            "estimate_correlation: no coincidences for settings (" +
            std::to_string(setting_1.millidegrees()) + " mdeg, " +
            std::to_string(setting_2.millidegrees()) + " mdeg)");
    }
    CorrelationEstimate estimate{setting_1, setting_2, counts, 0.0, 0.0};
    const double total = static_cast<double>(n);
    estimate.e_value = (static_cast<double>(counts.pp) + static_cast<double>(counts.mm) -
                        static_cast<double>(counts.pm) - static_cast<double>(counts.mp)) /
                       total;
    estimate.std_error = std::sqrt(std::max(0.0, 1.0 - estimate.e_value * estimate.e_value) / total);
    return estimate;
}

/// Tally the outcome table of the matched pairs carrying exactly the given
/// setting combination (compared through the millidegree encoding).
inline OutcomeCounts tally_outcomes(const std::vector<CoincidencePair>& pairs, Angle setting_1,
                                    Angle setting_2) {
    OutcomeCounts counts;
    const auto m1 = setting_1.millidegrees();
    const auto m2 = setting_2.millidegrees();
    for (const auto& pair : pairs) {
        if (pair.record_1.setting.millidegrees() == m1 &&
            pair.record_2.setting.millidegrees() == m2) {
            counts.add(pair.record_1.outcome, pair.record_2.outcome);
        }
    }
    return counts;
}

inline CorrelationEstimate estimate_correlation(const std::vector<CoincidencePair>& pairs,
                                                Angle setting_1, Angle setting_2) {
    return estimate_correlation(setting_1, setting_2, tally_outcomes(pairs, setting_1, setting_2));
}

/// Exact correlation estimate implied by a model expectation (zero error),
/// for analytic pipelines.
inline CorrelationEstimate analytic_estimate(Angle setting_1, Angle setting_2, double e_value) {
    CorrelationEstimate estimate{setting_1, setting_2, {}, e_value, 0.0};
    return estimate;
}

/// S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')| with the error combined in
/// quadrature. "violated" applies the 3-standard-error rule against the
/// factorizable bound of 2.
struct ChshResult {
    std::array<CorrelationEstimate, 4> terms{};  ///< ab, ab', a'b, a'b'
    double s_value = 0.0;
    double std_error = 0.0;
    bool violated = false;
};

inline ChshResult chsh(const CorrelationEstimate& e_ab, const CorrelationEstimate& e_abp,
                       const CorrelationEstimate& e_apb, const CorrelationEstimate& e_apbp) {
    const std::array<const CorrelationEstimate*, 4> terms{&e_ab, &e_abp, &e_apb, &e_apbp};
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            if (terms[i]->setting_1.millidegrees() == terms[j]->setting_1.millidegrees() &&
                terms[i]->setting_2.millidegrees() == terms[j]->setting_2.millidegrees()) {
                throw InsufficientDataError(
                    "chsh: needs four distinct setting combinations");
            }
        }
    }
    ChshResult result;
    result.terms = {e_ab, e_abp, e_apb, e_apbp};
    result.s_value = std::fabs(e_ab.e_value - e_abp.e_value + e_apb.e_value + e_apbp.e_value);
    result.std_error = std::sqrt(e_ab.std_error * e_ab.std_error +
                                 e_abp.std_error * e_abp.std_error +
                                 e_apb.std_error * e_apb.std_error +
                                 e_apbp.std_error * e_apbp.std_error);
    result.violated = result.s_value - 2.0 > 3.0 * result.std_error;
    return result;
}

/// Three-angle inequality 1 + E(b,c) >= |E(a,b) - E(a,c)|, reported as
/// margin = rhs - lhs with its propagated error; violated when the margin
/// exceeds three standard errors.
struct Bell1964Result {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double std_error = 0.0;
    bool violated = false;
};

inline Bell1964Result bell1964_check(const CorrelationEstimate& e_ab,
                                     const CorrelationEstimate& e_ac,
                                     const CorrelationEstimate& e_bc) {
    Bell1964Result result;
    result.lhs = 1.0 + e_bc.e_value;
    result.rhs = std::fabs(e_ab.e_value - e_ac.e_value);
    result.margin = result.rhs - result.lhs;
    result.std_error = std::sqrt(e_ab.std_error * e_ab.std_error +
                                 e_ac.std_error * e_ac.std_error +
                                 e_bc.std_error * e_bc.std_error);
    result.violated = result.margin > 3.0 * result.std_error;
    return result;
}

/// Named four-angle combination (a, a', b, b'). Artifact conventions, in
/// the polarization (period pi) angle convention.
struct AnglePreset {
    std::string_view name;
    std::array<Angle, 4> angles;
};

inline const std::vector<AnglePreset>& angle_presets() {
    static const std::vector<AnglePreset> presets = [] {
        std::vector<AnglePreset> p;
        p.push_back({"weihs-style",
                     {Angle{0.0}, Angle{0.25 * kPi}, Angle{0.125 * kPi}, Angle{0.375 * kPi}}});
        // the same combination under a common rotation; every model is
        // shift invariant, so the statistics must not move
        p.push_back({"weihs-rotated",
                     {Angle{kPi / 6.0}, Angle{kPi / 6.0 + 0.25 * kPi},
                      Angle{kPi / 6.0 + 0.125 * kPi}, Angle{kPi / 6.0 + 0.375 * kPi}}});
        return p;
    }();
    return presets;
}

inline const AnglePreset* find_preset(std::string_view name) {
    for (const auto& preset : angle_presets()) {
        if (preset.name == name) return &preset;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Correlation curves over a grid of setting differences.

enum class ModelKind { single_photon, phase_linked, furry, lhv };

inline std::string_view model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::single_photon: return "single-photon";
        case ModelKind::phase_linked: return "phase-linked";
        case ModelKind::furry: return "furry";
        case ModelKind::lhv: return "lhv";
    }
    return "unknown";
}

struct CurvePoint {
    double delta = 0.0;  ///< setting difference, radians
    double value = 0.0;
    double error = 0.0;
    std::uint64_t count = 0;  ///< matched pairs behind the point; 0 for model curves
};

struct CorrelationCurve {
    std::vector<CurvePoint> points;

    /// Fringe contrast (max - min) / (max + min) over the curve values.
    double visibility() const {
        if (points.empty()) return 0.0;
        double lo = points.front().value;
        double hi = lo;
        for (const auto& point : points) {
            lo = std::min(lo, point.value);
            hi = std::max(hi, point.value);
        }
        const double denom = hi + lo;
        return denom > 0.0 ? (hi - lo) / denom : 0.0;
    }
};

/// Model curve over setting differences. All four models are reported on
/// one scale: the pair coincidence probability per matched pair. The
/// hidden-variable expectation E is mapped through the unbiased-singles
/// relation P(+,+) = (1 + E) / 4; the single-photon curve is the
/// conditional probability (twice the pair value).
inline CorrelationCurve model_curve(ModelKind kind, std::span<const double> deltas,
                                    SetupOffset offset = {}, const QuadratureSettings& q = {}) {
    if (deltas.empty()) throw InvalidInputError("model_curve: delta grid must be nonempty");
    CorrelationCurve curve;
    curve.points.reserve(deltas.size());
    const LhvModelSpec lhv_spec =
        kind == ModelKind::lhv ? LhvModelSpec::default_sign_model() : LhvModelSpec{};
    for (const double delta : deltas) {
        double value = 0.0;
        switch (kind) {
            case ModelKind::single_photon:
                value = conditional_probability(Angle{0.0}, Angle{delta});
                break;
            case ModelKind::phase_linked:
                value = phase_linked_probability(Angle{0.0}, Angle{delta}, offset);
                break;
            case ModelKind::furry:
                value = furry_probability(Angle{delta}, Angle{0.0}, q);
                break;
            case ModelKind::lhv: {
                const double e = lhv_correlation(Angle{0.0}, Angle{delta}, lhv_spec, q);
                value = 0.25 * (1.0 + e);
                break;
            }
        }
        curve.points.push_back({delta, value, 0.0, 0});
    }
    return curve;
}

/// Data curve: fraction of (+,+) outcomes among matched pairs, binned by
/// the axis difference setting_2 - setting_1 (millidegree-exact). Grid
/// deltas with no pairs are omitted. Optionally restrict to tagged true
/// pairs.
inline CorrelationCurve data_curve(const std::vector<CoincidencePair>& pairs,
                                   std::span<const double> deltas, bool true_pairs_only = false) {
    if (deltas.empty()) throw InvalidInputError("data_curve: delta grid must be nonempty");
    CorrelationCurve curve;
    for (const double delta : deltas) {
        const auto delta_mdeg = Angle{delta}.millidegrees();
        std::uint64_t hits = 0;
        std::uint64_t both_plus = 0;
        for (const auto& pair : pairs) {
            if (true_pairs_only && !(pair.is_true_pair && *pair.is_true_pair)) continue;
            const auto pair_delta = (pair.record_2.setting.millidegrees() -
                                     pair.record_1.setting.millidegrees() + 180000) %
                                    180000;
            if (pair_delta != delta_mdeg) continue;
            ++hits;
            if (pair.record_1.outcome > 0 && pair.record_2.outcome > 0) ++both_plus;
        }
        if (hits == 0) continue;
        const double p = static_cast<double>(both_plus) / static_cast<double>(hits);
        const double err = std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(hits));
        curve.points.push_back({delta, p, err, hits});
    }
    return curve;
}

}  // namespace eprlab
