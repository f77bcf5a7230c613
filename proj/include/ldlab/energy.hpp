#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "ldlab/error.hpp"
#include "ldlab/fft.hpp"
#include "ldlab/geometry.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/riesz.hpp"
#include "ldlab/shapes.hpp"

namespace ldlab {

struct EnergyBreakdown {
    double P = 0.0;
    double V = 0.0;
    double E = 0.0;
    double m = 0.0;
    Kernel kernel;
};

/// Estimator choice for grid energies.
struct EnergyOptions {
    PerimeterMethod perimeter = PerimeterMethod::surface_mesh;
    EnergyMethod nonlocal = EnergyMethod::convolution;
};

/// lambda = (m / omega_n)^(1/n), epsilon = lambda^(n + 1 - alpha).
struct RescaleParams {
    double lambda = 1.0;
    double epsilon = 1.0;

    static RescaleParams for_mass(const Kernel& k, double m) {
        require(m > 0.0, ErrorCode::InvalidArgument, "mass must be positive");
        RescaleParams p;
        p.lambda = std::pow(m / unit_ball_volume(k.n), 1.0 / k.n);
        p.epsilon = std::pow(p.lambda, k.n + 1.0 - k.alpha);
        return p;
    }
};

/**
 * Closed-form energy of balls: e(m) = c1 m^((n-1)/n) + c2 m^((2n-alpha)/n),
 * c1 = n omega_n^(1/n), c2 = V(B_1) omega_n^(-(2n-alpha)/n).
 */
class BallOracle {
public:
    explicit BallOracle(const Kernel& k) : k_(k) {
        k.validate(false);
        const double w = unit_ball_volume(k.n);
        c1_ = k.n * std::pow(w, 1.0 / k.n);
        c2_ = ball_self_energy(k) * std::pow(w, -(2.0 * k.n - k.alpha) / k.n);
    }

    double c1() const { return c1_; }
    double c2() const { return c2_; }
    const Kernel& kernel() const { return k_; }

    double perimeter(double m) const { return c1_ * std::pow(m, (k_.n - 1.0) / k_.n); }
    double nonlocal(double m) const { return c2_ * std::pow(m, (2.0 * k_.n - k_.alpha) / k_.n); }
    double energy(double m) const { return perimeter(m) + nonlocal(m); }

    EnergyBreakdown breakdown(double m) const {
        require(m > 0.0, ErrorCode::InvalidArgument, "mass must be positive");
        const double p = perimeter(m), v = nonlocal(m);
        return {p, v, p + v, m, k_};
    }

    /// Mass where one ball and two half-mass balls (infinitely apart) cost the same.
    double two_ball_crossover() const {
        const double a = (k_.n - 1.0) / k_.n, b = (2.0 * k_.n - k_.alpha) / k_.n;
        // c1 m^a (2^(1-a) - 1) = c2 m^b (1 - 2^(1-b))
        return std::pow(c1_ * (std::pow(2.0, 1.0 - a) - 1.0) / (c2_ * (1.0 - std::pow(2.0, 1.0 - b))), 1.0 / (b - a));
    }

private:
    Kernel k_;
    double c1_ = 0.0;
    double c2_ = 0.0;
};

/// Analytic energy of the ball of mass m.
inline EnergyBreakdown ball_energy(int n, double alpha, double m) {
    return BallOracle(Kernel{n, alpha}).breakdown(m);
}

inline EnergyBreakdown total_energy(const GridSet& s, const Kernel& k, const EnergyOptions& opt = {}) {
    detail::check_kernel_for(s, k);
    EnergyBreakdown e;
    e.kernel = k;
    e.m = volume(s);
    if (s.empty()) return e;
    e.P = perimeter(s, opt.perimeter);
    e.V = nonlocal_energy(s, k, opt.nonlocal);
    e.E = e.P + e.V;
    return e;
}

struct RescaledEnergy {
    double value = 0.0;
    RescaleParams params;
};

/// E_eps(s) = P(s) + eps V(s) for a set of volume omega_n, with eps from mass m.
inline RescaledEnergy rescaled_energy(const GridSet& s, const Kernel& k, double m, const EnergyOptions& opt = {}) {
    detail::check_kernel_for(s, k);
    const double w = unit_ball_volume(k.n);
    require(std::abs(volume(s) - w) <= 0.01 * w, ErrorCode::MassMismatch, "rescaled energy needs volume omega_n within 1%");
    const RescaleParams p = RescaleParams::for_mass(k, m);
    const double value = perimeter(s, opt.perimeter) + p.epsilon * nonlocal_energy(s, k, opt.nonlocal);
    return {value, p};
}

/// D = P / (n omega_n^(1/n) m^((n-1)/n)) - 1.
inline double isoperimetric_deficit(const GridSet& s, PerimeterMethod method = PerimeterMethod::surface_mesh) {
    require(!s.empty(), ErrorCode::EmptySet, "deficit of an empty set");
    const int n = s.dim();
    const double ref = n * std::pow(unit_ball_volume(n), 1.0 / n) * std::pow(volume(s), (n - 1.0) / n);
    return perimeter(s, method) / ref - 1.0;
}

// ---------------------------------------------------------------------------
// Fraenkel asymmetry over lattice translations. The overlap |F ∩ (G + x)| for
// every integer shift x is one cross-correlation of the cropped index arrays.

namespace detail {

struct Cropped {
    Index shape{1, 1, 1};
    std::vector<double> cells;
};

inline Cropped crop(const GridSet& s) {
    const BoundingBox box = bounding_box(s);
    Cropped c;
    for (int a = 0; a < 3; ++a) c.shape[a] = box.hi[a] - box.lo[a] + 1;
    c.cells.assign(static_cast<std::size_t>(c.shape[0]) * c.shape[1] * c.shape[2], 0.0);
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        const Index i = s.coords(f);
        c.cells[(static_cast<std::size_t>(i[0] - box.lo[0]) * c.shape[1] + (i[1] - box.lo[1])) * c.shape[2] +
                (i[2] - box.lo[2])] = 1.0;
    }
    return c;
}

/// max over integer shifts of the number of common cells.
inline std::size_t max_overlap(const GridSet& f, const GridSet& g) {
    const Cropped a = crop(f), b = crop(g);
    const int dim = f.dim();
    std::array<int, 3> P{1, 1, 1};
    for (int ax = 0; ax < dim; ++ax) P[ax] = fft::good_size(a.shape[ax] + b.shape[ax] - 1);
    fft::RealTransform ta(dim, P), tb(dim, P);
    auto load = [&](fft::RealTransform& t, const Cropped& c) {
        std::fill(t.real(), t.real() + t.real_size(), 0.0);
        for (int x = 0; x < c.shape[0]; ++x)
            for (int y = 0; y < c.shape[1]; ++y)
                for (int z = 0; z < c.shape[2]; ++z)
                    t.real()[(static_cast<std::size_t>(x) * P[1] + y) * P[2] + z] =
                        c.cells[(static_cast<std::size_t>(x) * c.shape[1] + y) * c.shape[2] + z];
        t.forward();
    };
    load(ta, a);
    load(tb, b);
    // corr(x) = sum_i a(i + x) b(i)
    for (std::size_t i = 0; i < ta.complex_size(); ++i) ta.spectrum()[i] *= std::conj(tb.spectrum()[i]);
    ta.backward();
    double best = 0.0;
    for (std::size_t i = 0; i < ta.real_size(); ++i) best = std::max(best, ta.real()[i]);
    return static_cast<std::size_t>(std::llround(best / static_cast<double>(ta.real_size())));
}

} // namespace detail

/// min over lattice shifts x of |F Δ (G + x)| / |F|, in [0, 2].
inline double fraenkel_asymmetry(const GridSet& f, const GridSet& g) {
    require(f.dim() == g.dim() && f.spacing() == g.spacing(), ErrorCode::DimensionMismatch,
            "asymmetry needs equal dimension and spacing");
    const std::size_t nf = f.count(), ng = g.count();
    require(nf > 0 && ng > 0, ErrorCode::EmptySet, "asymmetry of an empty set");
    require((nf > ng ? nf - ng : ng - nf) <= 1, ErrorCode::MassMismatch, "volumes differ by more than one cell");
    const std::size_t overlap = detail::max_overlap(f, g);
    return static_cast<double>(nf + ng - 2 * overlap) / static_cast<double>(nf);
}

struct QisoReport {
    double asymmetry = 0.0;
    double deficit = 0.0;
    double ratio = 0.0; ///< asymmetry / sqrt(deficit)
    double tolerance = 0.0;
};

/// Deficit below which a set counts as a ball on this lattice: the
/// rasterized ball's own |D| plus 0.005.
inline double deficit_tolerance(const GridSet& s, PerimeterMethod method = PerimeterMethod::surface_mesh) {
    const GridSet ball = make_ball(s.dim(), volume(s), s.spacing());
    return std::abs(isoperimetric_deficit(ball, method)) + 0.005;
}

/// Both sides of Delta(F, B) <= C sqrt(D(F)) against the same-volume rasterized ball.
inline QisoReport check_qiso(const GridSet& s, PerimeterMethod method = PerimeterMethod::surface_mesh) {
    require(!s.empty(), ErrorCode::EmptySet, "quantitative isoperimetry of an empty set");
    QisoReport r;
    r.deficit = isoperimetric_deficit(s, method);
    r.tolerance = deficit_tolerance(s, method);
    require(r.deficit > r.tolerance, ErrorCode::DegenerateDeficit, "deficit within estimator tolerance");
    const GridSet ball = ball_by_count(lattice_for_radius(s.dim(), ball_radius(s.dim(), volume(s)), s.spacing()),
                                       Point{0.0, 0.0, 0.0}, s.count());
    r.asymmetry = fraenkel_asymmetry(s, ball);
    r.ratio = r.asymmetry / std::sqrt(r.deficit);
    return r;
}

/// m / (P^((n-alpha)/(n+1-alpha)) V^(1/(n+1-alpha))) for the indicator of s.
inline double interpolation_ratio(double m, double P, double V, const Kernel& k) {
    const double q = k.n + 1.0 - k.alpha;
    return m / (std::pow(P, (k.n - k.alpha) / q) * std::pow(V, 1.0 / q));
}

inline double interpolation_ratio(const GridSet& s, const Kernel& k, const EnergyOptions& opt = {}) {
    require(!s.empty(), ErrorCode::EmptySet, "interpolation ratio of an empty set");
    const EnergyBreakdown e = total_energy(s, k, opt);
    return interpolation_ratio(e.m, e.P, e.V, k);
}

} // namespace ldlab
