// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "eprlab/angle.hpp"
#include "eprlab/errors.hpp"

namespace eprlab {

enum class QuadratureRule {
    trapezoid_periodic,  ///< equal-weight nodes; spectrally accurate on periodic integrands
    gauss_legendre,      ///< for non-periodic integrands
};

struct QuadratureSettings {
    int node_count = 512;
    QuadratureRule rule = QuadratureRule::trapezoid_periodic;
};

inline void validate(const QuadratureSettings& q) {
    if (q.node_count < 16) {
        throw ConfigError("quadrature: node_count must be >= 16");
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// by Newton iteration on the Legendre recurrence.
inline void gauss_legendre_nodes(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 64; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double step = p0 / pp;
            z -= step;
            if (std::fabs(step) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

/// Integrate f over [a, b] with the configured rule. The periodic
/// trapezoid rule assumes f has period (b - a).
template <typename F>
double integrate(F&& f, double a, double b, const QuadratureSettings& q = {}) {
    validate(q);
    const int n = q.node_count;
    double sum = 0.0;
    if (q.rule == QuadratureRule::trapezoid_periodic) {
        const double h = (b - a) / n;
        for (int k = 0; k < n; ++k) sum += f(a + k * h);
        return sum * h;
    }
    std::vector<double> x;
    std::vector<double> w;
    gauss_legendre_nodes(n, x, w);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int k = 0; k < n; ++k) sum += w[k] * f(mid + half * x[k]);
    return sum * half;
}

/// Integrate a function that is smooth between known breakpoints:
/// Gauss-Legendre inside every piece. Exact (to rounding) for integrands
/// that are low-degree polynomials between the edges, in particular for
/// piecewise-constant sign products against a smooth density.
template <typename F>
double integrate_piecewise(F&& f, const std::vector<double>& edges, int nodes_per_piece = 16) {
    if (edges.size() < 2) {
        throw InvalidInputError("integrate_piecewise: need at least two edges");
    }
    std::vector<double> x;
    std::vector<double> w;
    gauss_legendre_nodes(nodes_per_piece, x, w);
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p];
        const double b = edges[p + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double sum = 0.0;
        for (int k = 0; k < nodes_per_piece; ++k) sum += w[k] * f(mid + half * x[k]);
        total += sum * half;
    }
    return total;
}

}  // namespace eprlab
