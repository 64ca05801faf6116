// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace eprlab {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Polarizer-axis angle in radians.
///
/// A polarizer axis is unoriented: a setting and the setting rotated by pi
/// select the same axis. Values are therefore stored canonically in
/// [0, pi). All the trigonometry downstream depends on axis differences
/// only through pi-periodic functions, so normalization never changes a
/// physical result; it exists to make equality, hashing and file encodings
/// well defined.
class Angle {
public:
    constexpr Angle() = default;
    explicit Angle(double radians) : radians_(normalize(radians)) {}

    static Angle from_degrees(double degrees) { return Angle(degrees * kPi / 180.0); }
    static Angle from_millidegrees(std::int64_t mdeg) {
        return Angle(static_cast<double>(mdeg) * kPi / 180.0e3);
    }

    double radians() const { return radians_; }
    double degrees() const { return radians_ * 180.0 / kPi; }

    /// Rounded integer encoding in [0, 180000), used by all file formats.
    std::int64_t millidegrees() const {
        const auto m = static_cast<std::int64_t>(std::llround(degrees() * 1000.0));
        return m % 180000;
    }

    /// Canonical representative of the axis in [0, pi). Idempotent.
    static double normalize(double radians) {
        double a = std::fmod(radians, kPi);
        if (a < 0.0) a += kPi;
        if (a >= kPi) a = 0.0;  // fmod rounding can land exactly on pi
        return a;
    }

    friend bool operator==(Angle lhs, Angle rhs) { return lhs.radians_ == rhs.radians_; }
    friend auto operator<=>(Angle lhs, Angle rhs) { return lhs.radians_ <=> rhs.radians_; }

private:
    double radians_ = 0.0;
};

}  // namespace eprlab
