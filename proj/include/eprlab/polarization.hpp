// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "eprlab/angle.hpp"
#include "eprlab/errors.hpp"

namespace eprlab {

/// Linear field amplitude along a polarization axis.
///
/// Only the intensity ratio magnitude^2 is observable; the absolute scale
/// carries no physics and every derived quantity is scale invariant.
struct FieldAmplitude {
    double magnitude = 1.0;  ///< >= 0, arbitrary field units
    Angle axis{};
};

/// Project a field onto a polarizer axis: the transmitted amplitude is
/// reduced by |cos| of the axis difference and realigned to the setting.
inline FieldAmplitude apply_polarizer(const FieldAmplitude& field, Angle setting) {
    if (!std::isfinite(field.magnitude) || field.magnitude < 0.0) {
        throw InvalidInputError("apply_polarizer: magnitude must be finite and nonnegative");
    }
    const double reduced =
        field.magnitude * std::fabs(std::cos(setting.radians() - field.axis.radians()));
    return FieldAmplitude{reduced, setting};
}

/// An input polarization axis followed by one or more polarizer settings.
struct CascadeSpec {
    Angle initial_axis{};
    std::vector<Angle> stages;
};

/// Transmitted / input intensity of a polarizer chain: the product of
/// cos^2 over successive axis differences. Equals the squared magnitude
/// left by chaining apply_polarizer with unit input.
inline double cascade_intensity_fraction(const CascadeSpec& spec) {
    if (spec.stages.empty()) {
        throw InvalidInputError("cascade_intensity_fraction: cascade needs at least one stage");
    }
    double fraction = 1.0;
    double previous = spec.initial_axis.radians();
    for (const Angle stage : spec.stages) {
        const double c = std::cos(stage.radians() - previous);
        fraction *= c * c;
        previous = stage.radians();
    }
    return fraction;
}

/// Probability that the second of two consecutive polarization
/// measurements flips the outcome of the first:
/// 1 - cos^2(beta - alpha) = sin^2(beta - alpha).
inline double conditional_probability(Angle alpha, Angle beta) {
    const double c = std::cos(beta.radians() - alpha.radians());
    return 1.0 - c * c;
}

}  // namespace eprlab
