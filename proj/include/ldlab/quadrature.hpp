#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace ldlab::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [a, b] (Newton iteration on P_n).
inline Rule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        if (n == 1) { x = 0.0; dp = 1.0; }
        const double w = n == 1 ? 2.0 : 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

/// Double-exponential quadrature on [a, b]; copes with integrable endpoint
/// singularities. Thread-safe: each call owns its integrator.
///
/// The interval is split at its midpoint and each half is integrated in the
/// distance to its outer endpoint, so abscissas crowd towards 0 where a
/// double has full relative precision. An endpoint singularity is best
/// expressed by the caller as a singularity at a = 0.
inline double tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    if (!(b > a)) return 0.0;
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double half = 0.5 * (b - a);
    auto left = [&](double x) { return f(a + x); };
    auto right = [&](double x) { return f(b - x); };
    return integrator.integrate(left, 0.0, half, tol) + integrator.integrate(right, 0.0, half, tol);
}

} // namespace ldlab::quadrature
