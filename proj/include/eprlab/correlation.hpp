// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "eprlab/angle.hpp"
#include "eprlab/errors.hpp"
#include "eprlab/polarization.hpp"
#include "eprlab/quadrature.hpp"

namespace eprlab {

/// Two-component complex amplitude: transversal (real) and kinetic
/// (imaginary) parts of the photon field.
struct ComplexField {
    double re = 0.0;
    double im = 0.0;
};

/// Phase constant describing the experimental convention, e.g. whether
/// transmission or absorption counts as the coincidence event. A phase,
/// not an axis: period 2*pi, never axis-normalized.
struct SetupOffset {
    double phi0 = 0.0;

    static SetupOffset transmission() { return SetupOffset{0.0}; }
    static SetupOffset absorption() { return SetupOffset{0.5 * kPi}; }
};

/// Pair coincidence probability of the phase-linked law:
/// (1/2) sin^2(beta - alpha - phi0).
inline double phase_linked_probability(Angle alpha, Angle beta, SetupOffset offset = {}) {
    const double s = std::sin(beta.radians() - alpha.radians() - offset.phi0);
    return 0.5 * s * s;
}

struct PhaseLinkedIntegral {
    double real_part = 0.0;  ///< normalized; reproduces the closed-form law
    double imag_part = 0.0;  ///< kinetic-component diagnostic, same normalization
};

/// Interference integral behind the phase-linked law, evaluated by
/// quadrature over the shared phase x in [0, 2*pi).
///
/// The two photon fields enter as one linear product; the second field has
/// sin and cos exchanged (a quarter-period shift) and carries the setup
/// offset with the sign that matches the closed form
/// (1/2) sin^2(beta - alpha - phi0). The squared real component,
/// normalized by 4*pi, is the correlation probability; the squared
/// imaginary component is returned as a diagnostic with no interpretation
/// attached. The two parts sum to 1/2.
inline PhaseLinkedIntegral phase_linked_integral(Angle alpha, Angle beta, SetupOffset offset,
                                                 const QuadratureSettings& q = {}) {
    const double a = alpha.radians();
    const double b = beta.radians();
    const double phi0 = offset.phi0;
    const auto product = [&](double x) {
        const ComplexField first{std::cos(x - a), std::sin(x - a)};
        const ComplexField second{std::sin(x - b + phi0), std::cos(x - b + phi0)};
        return ComplexField{first.re * second.re - first.im * second.im,
                            first.re * second.im + first.im * second.re};
    };
    const double norm = 4.0 * kPi;
    const double re = integrate(
        [&](double x) {
            const double r = product(x).re;
            return r * r;
        },
        0.0, kTwoPi, q);
    const double im = integrate(
        [&](double x) {
            const double i = product(x).im;
            return i * i;
        },
        0.0, kTwoPi, q);
    return PhaseLinkedIntegral{re / norm, im / norm};
}

/// Normalized ratio form of the phase-linked correlation, evaluated
/// literally by quadrature: the numerator integrates
/// [cos x sin(x - phi) - sin x cos(x - phi)]^2, the denominator is
/// 2 * integral of (cos^2 x + sin^2 x). Equals (1/2) sin^2(phi).
inline double kracklauer_normalized(double phi, const QuadratureSettings& q = {}) {
    const double numerator = integrate(
        [&](double x) {
            const double r = std::cos(x) * std::sin(x - phi) - std::sin(x) * std::cos(x - phi);
            return r * r;
        },
        0.0, kTwoPi, q);
    const double denominator = 2.0 * integrate(
                                         [](double x) {
                                             const double c = std::cos(x);
                                             const double s = std::sin(x);
                                             return c * c + s * s;
                                         },
                                         0.0, kTwoPi, q);
    return numerator / denominator;
}

/// Mixed-pair correlation: both Malus responses averaged over one shared
/// random polarization angle, the two measurements entering as separate
/// intensity factors. Normalized by 4*pi so the curve is directly
/// comparable with the phase-linked one; retains half the contrast.
inline double furry_probability(Angle alpha, Angle beta, const QuadratureSettings& q = {}) {
    const double delta = alpha.radians() - beta.radians();
    const double raw = integrate(
        [&](double x) {
            const double c1 = std::cos(x);
            const double c2 = std::cos(x - delta);
            return c1 * c1 * c2 * c2;
        },
        0.0, kTwoPi, q);
    return raw / (4.0 * kPi);
}

/// Factorizable hidden-variable model: deterministic +/-1 responses per
/// station, each a function of its local setting and the shared lambda,
/// averaged over a lambda density on [0, 2*pi).
struct LhvModelSpec {
    std::function<double(double setting, double lambda)> response_a;
    std::function<double(double setting, double lambda)> response_b;
    std::function<double(double lambda)> density;

    /// Sorted sign-change points of a response in [0, 2*pi), or an empty
    /// vector when unknown. With breakpoints the correlation integral is
    /// evaluated exactly piecewise instead of by a blind composite rule.
    std::function<std::vector<double>(double setting)> breakpoints_a;
    std::function<std::vector<double>(double setting)> breakpoints_b;

    /// Doubled-angle sign responses (polarization observables have period
    /// pi) with perfect anticorrelation at equal settings, over a uniform
    /// lambda density.
    static LhvModelSpec default_sign_model() {
        LhvModelSpec spec;
        spec.response_a = [](double setting, double lambda) {
            return std::cos(2.0 * (setting - lambda)) >= 0.0 ? 1.0 : -1.0;
        };
        spec.response_b = [](double setting, double lambda) {
            return std::cos(2.0 * (setting - lambda)) >= 0.0 ? -1.0 : 1.0;
        };
        spec.density = [](double) { return 1.0 / kTwoPi; };
        const auto sign_breaks = [](double setting) {
            // zeros of cos(2(setting - lambda)) in [0, 2*pi): every pi/2
            std::vector<double> breaks(4);
            for (int k = 0; k < 4; ++k) {
                double z = setting + 0.25 * kPi + 0.5 * kPi * k;
                z = std::fmod(z, kTwoPi);
                if (z < 0.0) z += kTwoPi;
                breaks[k] = z;
            }
            std::sort(breaks.begin(), breaks.end());
            return breaks;
        };
        spec.breakpoints_a = sign_breaks;
        spec.breakpoints_b = sign_breaks;
        return spec;
    }
};

namespace detail {

inline std::vector<double> lhv_edges(const LhvModelSpec& spec, Angle a, Angle b) {
    std::vector<double> edges{0.0, kTwoPi};
    if (spec.breakpoints_a) {
        const auto breaks = spec.breakpoints_a(a.radians());
        edges.insert(edges.end(), breaks.begin(), breaks.end());
    }
    if (spec.breakpoints_b) {
        const auto breaks = spec.breakpoints_b(b.radians());
        edges.insert(edges.end(), breaks.begin(), breaks.end());
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

}  // namespace detail

/// Expectation of the response product over the hidden variable:
/// integral of density(lambda) * A(a, lambda) * B(b, lambda).
///
/// The result is normalized by the same-rule integral of the density, so
/// sign models give exactly -1 at equal settings. The density itself must
/// integrate to 1 within 1e-6 (checked independently on a fine grid).
inline double lhv_correlation(Angle a, Angle b, const LhvModelSpec& spec,
                              const QuadratureSettings& q = {}) {
    validate(q);
    if (!spec.response_a || !spec.response_b || !spec.density) {
        throw InvalidModelError("lhv_correlation: model needs both responses and a density");
    }
    const QuadratureSettings norm_check{4096, QuadratureRule::trapezoid_periodic};
    const double mass = integrate([&](double l) { return spec.density(l); }, 0.0, kTwoPi, norm_check);
    if (std::fabs(mass - 1.0) > 1e-6) {
        throw InvalidModelError("lhv_correlation: density does not integrate to 1");
    }
    const auto weighted_product = [&](double l) {
        return spec.density(l) * spec.response_a(a.radians(), l) * spec.response_b(b.radians(), l);
    };
    const auto edges = detail::lhv_edges(spec, a, b);
    if (edges.size() > 2) {
        const double numerator = integrate_piecewise(weighted_product, edges);
        const double denominator =
            integrate_piecewise([&](double l) { return spec.density(l); }, edges);
        return numerator / denominator;
    }
    const double numerator = integrate(weighted_product, 0.0, kTwoPi, q);
    const double denominator = integrate([&](double l) { return spec.density(l); }, 0.0, kTwoPi, q);
    return numerator / denominator;
}

/// Joint probabilities of the four outcome pairs under the phase-linked
/// law. The law fixes the (+,+) entry; the table is completed with the
/// unique symmetric assignment that leaves both single-station marginals
/// at 1/2 whatever the remote setting.
struct JointOutcomeTable {
    double pp = 0.0;
    double pm = 0.0;
    double mp = 0.0;
    double mm = 0.0;

    double sum() const { return pp + pm + mp + mm; }
    double expectation() const { return pp + mm - pm - mp; }
    double marginal_plus_1() const { return pp + pm; }
    double marginal_plus_2() const { return pp + mp; }
};

inline JointOutcomeTable joint_outcome_table(Angle alpha, Angle beta, SetupOffset offset = {}) {
    const double coincidence = phase_linked_probability(alpha, beta, offset);
    const double anti = 0.5 - coincidence;
    return JointOutcomeTable{coincidence, anti, anti, coincidence};
}

}  // namespace eprlab
