#pragma once

// Star-shaped sets {x : |x| < 1 + rho(x / |x|)} with rho a finite real
// spherical-harmonic series (n = 3) or Fourier series (n = 2).
//
// Coefficient layout. n = 3: index l^2 + l + m for -l <= m <= l, orthonormal
// real harmonics without the Condon-Shortley phase (m > 0 cosine, m < 0 sine).
// n = 2: index 0 is the constant, 2k - 1 is cos(k t), 2k is sin(k t), all
// normalized on the circle. In both cases ||rho||_2^2 = sum of squares.
//
// Every energy is taken after uniform scaling to volume omega_n. Degree 0
// (a volume change) and degree 1 (a translation, to first order) are gauge
// directions and are held at zero by the descent.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ldlab/energy.hpp"
#include "ldlab/error.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/parallel.hpp"
#include "ldlab/quadrature.hpp"
#include "ldlab/riesz.hpp"

namespace ldlab {

struct StarShape {
    int n = 3;
    int degree = 4;
    std::vector<double> coeffs;

    static std::size_t basis_size(int n, int degree) {
        return n == 3 ? static_cast<std::size_t>((degree + 1) * (degree + 1)) : static_cast<std::size_t>(2 * degree + 1);
    }

    /// Degree l of coefficient i.
    static int mode_degree(int n, std::size_t i) {
        return n == 3 ? static_cast<int>(std::floor(std::sqrt(static_cast<double>(i)) + 1e-9))
                      : static_cast<int>((i + 1) / 2);
    }

    static StarShape sphere(int n, int degree) {
        require(n == 2 || n == 3, ErrorCode::InvalidArgument, "star shapes need n in {2, 3}");
        require(degree >= 0, ErrorCode::InvalidArgument, "degree must be non-negative");
        return StarShape{n, degree, std::vector<double>(basis_size(n, degree), 0.0)};
    }

    /// Coefficient of Y_l^m (n = 3) or of cos (m = 1) / sin (m = -1) of degree l (n = 2).
    double& at(int l, int m) { return coeffs[index(l, m)]; }
    double at(int l, int m) const { return coeffs[index(l, m)]; }

    std::size_t index(int l, int m) const {
        require(l >= 0 && l <= degree, ErrorCode::InvalidArgument, "degree out of range");
        if (n == 3) {
            require(std::abs(m) <= l, ErrorCode::InvalidArgument, "order out of range");
            return static_cast<std::size_t>(l * l + l + m);
        }
        if (l == 0) return 0;
        require(m == 1 || m == -1, ErrorCode::InvalidArgument, "2-D modes use m = +1 (cos) or -1 (sin)");
        return static_cast<std::size_t>(m == 1 ? 2 * l - 1 : 2 * l);
    }

    bool free_coefficient(std::size_t i) const { return mode_degree(n, i) >= 2; }
};

namespace detail {

/// Orthonormal real harmonics of degree <= L at (cos t, phi), with the polar
/// derivative and the azimuthal derivative divided by sin t when requested.
inline void real_harmonics(int L, double x, double phi, double* y, double* dtheta, double* dphi_sin) {
    const double st = std::sqrt(std::max(0.0, 1.0 - x * x));
    // associated Legendre P_l^m, no Condon-Shortley phase
    std::vector<double> P(static_cast<std::size_t>((L + 1) * (L + 1)), 0.0);
    auto p = [&](int l, int m) -> double& { return P[static_cast<std::size_t>(l * (L + 1) + m)]; };
    double pmm = 1.0;
    for (int m = 0; m <= L; ++m) {
        if (m > 0) pmm *= (2.0 * m - 1.0) * st;
        p(m, m) = pmm;
        if (m + 1 <= L) p(m + 1, m) = x * (2.0 * m + 1.0) * pmm;
        for (int l = m + 2; l <= L; ++l)
            p(l, m) = ((2.0 * l - 1.0) * x * p(l - 1, m) - (l + m - 1.0) * p(l - 2, m)) / (l - m);
    }
    for (int l = 0; l <= L; ++l) {
        for (int m = 0; m <= l; ++m) {
            double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) * std::tgamma(l - m + 1.0) /
                                    std::tgamma(l + m + 1.0));
            if (m > 0) norm *= std::numbers::sqrt2;
            const double plm = p(l, m);
            // dP/dtheta = (l x P_l^m - (l + m) P_{l-1}^m) / sin t
            double dp = 0.0;
            if (dtheta) {
                const double prev = l >= 1 && m <= l - 1 ? p(l - 1, m) : 0.0;
                dp = (l * x * plm - (l + m) * prev) / st;
            }
            const double c = std::cos(m * phi), s = std::sin(m * phi);
            const std::size_t ip = static_cast<std::size_t>(l * l + l + m);
            const std::size_t im = static_cast<std::size_t>(l * l + l - m);
            if (m == 0) {
                y[ip] = norm * plm;
                if (dtheta) dtheta[ip] = norm * dp;
                if (dphi_sin) dphi_sin[ip] = 0.0;
            } else {
                y[ip] = norm * plm * c;
                y[im] = norm * plm * s;
                if (dtheta) {
                    dtheta[ip] = norm * dp * c;
                    dtheta[im] = norm * dp * s;
                }
                if (dphi_sin) {
                    dphi_sin[ip] = -m * norm * plm / st * s;
                    dphi_sin[im] = m * norm * plm / st * c;
                }
            }
        }
    }
}

/// Orthonormal Fourier basis of degree <= L at angle t, with derivative.
inline void fourier_basis(int L, double t, double* y, double* dy) {
    const double c0 = 1.0 / std::sqrt(2.0 * std::numbers::pi), c1 = 1.0 / std::sqrt(std::numbers::pi);
    y[0] = c0;
    if (dy) dy[0] = 0.0;
    for (int k = 1; k <= L; ++k) {
        y[2 * k - 1] = c1 * std::cos(k * t);
        y[2 * k] = c1 * std::sin(k * t);
        if (dy) {
            dy[2 * k - 1] = -k * c1 * std::sin(k * t);
            dy[2 * k] = k * c1 * std::cos(k * t);
        }
    }
}

/// C-infinity step: 0 for t <= -1, 1 for t >= 1.
inline double smooth_step(double t) {
    if (t <= -1.0) return 0.0;
    if (t >= 1.0) return 1.0;
    auto g = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
    const double a = g(t + 1.0), b = g(1.0 - t);
    return a / (a + b);
}

} // namespace detail

struct StarOptions {
    double h = 1.0 / 12.0;     ///< grid spacing for the nonlocal term
    double grid_radius = 1.6;  ///< half-width of the grid box
    double smoothing = 1.5;    ///< transition half-width of the occupancy, in cells
    int quad_theta = 0;        ///< polar (n = 3) or angular (n = 2) nodes; 0: automatic
    double fd_step = 1e-3;     ///< central-difference step for the nonlocal gradient
};

struct SurfaceMeasures {
    double area = 0.0;   ///< unnormalized P
    double volume = 0.0; ///< unnormalized |Omega|
    std::vector<double> d_area;
    std::vector<double> d_volume;
    double min_radius = 0.0;
};

/**
 * Quadrature and grid tables for one (n, degree, kernel, options). Energies
 * of many shapes of that degree reuse the tables and the FFT plans.
 */
class StarModel {
public:
    StarModel(int n, int degree, const Kernel& k, const StarOptions& opt = {})
        : n_(n), degree_(degree), k_(k), opt_(opt), nb_(StarShape::basis_size(n, degree)) {
        require(n == 2 || n == 3, ErrorCode::InvalidArgument, "star shapes need n in {2, 3}");
        require(k.n == n, ErrorCode::DimensionMismatch, "kernel dimension differs from shape dimension");
        k.validate(true);
        build_quadrature();
    }

    int dim() const { return n_; }
    int degree() const { return degree_; }
    const Kernel& kernel() const { return k_; }
    const StarOptions& options() const { return opt_; }
    std::size_t nodes() const { return weights_.size(); }

    /// Area and volume of the unscaled shape, with coefficient gradients if asked.
    SurfaceMeasures measures(const StarShape& s, bool gradients = false) const {
        check(s);
        SurfaceMeasures out;
        if (gradients) {
            out.d_area.assign(nb_, 0.0);
            out.d_volume.assign(nb_, 0.0);
        }
        out.min_radius = std::numeric_limits<double>::infinity();
        CompensatedSum area, vol;
        for (std::size_t q = 0; q < weights_.size(); ++q) {
            const double* y = &basis_[q * nb_];
            const double* dt = &dtheta_[q * nb_];
            const double* dp = n_ == 3 ? &dphi_[q * nb_] : nullptr;
            double r = 1.0, gt = 0.0, gp = 0.0;
            for (std::size_t i = 0; i < nb_; ++i) {
                r += s.coeffs[i] * y[i];
                gt += s.coeffs[i] * dt[i];
                if (dp) gp += s.coeffs[i] * dp[i];
            }
            out.min_radius = std::min(out.min_radius, r);
            const double root = std::sqrt(r * r + gt * gt + gp * gp);
            const double w = weights_[q];
            // n = 3: dA = r sqrt(r^2 + |grad r|^2) dw;  n = 2: ds = sqrt(r^2 + r'^2) dt
            const double a = n_ == 3 ? r * root : root;
            area.add(w * a);
            vol.add(w * std::pow(r, n_) / n_);
            if (gradients) {
                const double rn1 = std::pow(r, n_ - 1);
                for (std::size_t i = 0; i < nb_; ++i) {
                    const double inner = r * y[i] + gt * dt[i] + (dp ? gp * dp[i] : 0.0);
                    const double da = n_ == 3 ? y[i] * root + r * inner / root : inner / root;
                    out.d_area[i] += w * da;
                    out.d_volume[i] += w * rn1 * y[i];
                }
            }
        }
        out.area = area.value();
        out.volume = vol.value();
        require(out.min_radius > 0.0, ErrorCode::NotStarShaped, "1 + rho <= 0 on the quadrature grid");
        return out;
    }

    /// Scale factor taking the shape to volume omega_n.
    double volume_scale(const SurfaceMeasures& m) const { return std::pow(unit_ball_volume(n_) / m.volume, 1.0 / n_); }

    /// Perimeter after volume renormalization, and its gradient.
    double normalized_perimeter(const StarShape& s, std::vector<double>* grad = nullptr) const {
        const SurfaceMeasures m = measures(s, grad != nullptr);
        const double scale = volume_scale(m);
        const double p = std::pow(scale, n_ - 1) * m.area;
        if (grad) {
            grad->assign(nb_, 0.0);
            for (std::size_t i = 0; i < nb_; ++i)
                (*grad)[i] = p * (m.d_area[i] / m.area - (n_ - 1.0) / n_ * m.d_volume[i] / m.volume);
        }
        return p;
    }

    /// Nonlocal energy of the volume-renormalized shape via its smoothed occupancy.
    double normalized_nonlocal(const StarShape& s) const {
        check(s);
        const SurfaceMeasures m = measures(s);
        const double scale = volume_scale(m);
        ensure_grid();
        const double width = opt_.smoothing * opt_.h;
        std::vector<double> density(grid_cells_, 0.0);
        double rmax = 0.0;
        for (std::size_t c = 0; c < grid_points_.size(); ++c) {
            const double* y = &grid_basis_[c * nb_];
            double r = 1.0;
            for (std::size_t i = 0; i < nb_; ++i) r += s.coeffs[i] * y[i];
            r *= scale;
            rmax = std::max(rmax, r);
            density[grid_points_[c]] = detail::smooth_step((r - grid_radius_[c]) / width);
        }
        require(rmax + width < opt_.grid_radius - opt_.h, ErrorCode::BoxTooSmall, "star shape exceeds the grid radius");
        for (std::size_t f = 0; f < grid_cells_; ++f)
            if (grid_inner_[f]) density[f] = 1.0;
        return convolver_->energy(density);
    }

    EnergyBreakdown energy(const StarShape& s, double eps) const {
        EnergyBreakdown e;
        e.kernel = k_;
        e.m = unit_ball_volume(n_);
        e.P = normalized_perimeter(s);
        e.V = eps != 0.0 ? normalized_nonlocal(s) : 0.0;
        e.E = e.P + eps * e.V;
        return e;
    }

    /// Gradient of E_eps over the free coefficients (others zero): analytic for
    /// P, central differences for V.
    std::vector<double> gradient(const StarShape& s, double eps) const {
        std::vector<double> g;
        normalized_perimeter(s, &g);
        for (std::size_t i = 0; i < nb_; ++i) {
            if (!s.free_coefficient(i)) {
                g[i] = 0.0;
                continue;
            }
            if (eps != 0.0) g[i] += eps * nonlocal_derivative(s, i, opt_.fd_step);
        }
        return g;
    }

    double nonlocal_derivative(const StarShape& s, std::size_t i, double step) const {
        StarShape a = s, b = s;
        a.coeffs[i] += step;
        b.coeffs[i] -= step;
        return (normalized_nonlocal(a) - normalized_nonlocal(b)) / (2.0 * step);
    }

    /// rho evaluated at the quadrature nodes.
    std::vector<double> node_values(const StarShape& s) const {
        check(s);
        std::vector<double> out(weights_.size(), 0.0);
        for (std::size_t q = 0; q < weights_.size(); ++q)
            for (std::size_t i = 0; i < nb_; ++i) out[q] += s.coeffs[i] * basis_[q * nb_ + i];
        return out;
    }

    /// |grad_S rho| at the quadrature nodes.
    std::vector<double> node_gradient_norms(const StarShape& s) const {
        check(s);
        std::vector<double> out(weights_.size(), 0.0);
        for (std::size_t q = 0; q < weights_.size(); ++q) {
            double gt = 0.0, gp = 0.0;
            for (std::size_t i = 0; i < nb_; ++i) {
                gt += s.coeffs[i] * dtheta_[q * nb_ + i];
                if (n_ == 3) gp += s.coeffs[i] * dphi_[q * nb_ + i];
            }
            out[q] = std::hypot(gt, gp);
        }
        return out;
    }

    const std::vector<double>& weights() const { return weights_; }

private:
    void check(const StarShape& s) const {
        require(s.n == n_ && s.degree == degree_ && s.coeffs.size() == nb_, ErrorCode::DimensionMismatch,
                "shape layout does not match the model");
    }

    void build_quadrature() {
        if (n_ == 3) {
            const int nt = opt_.quad_theta > 0 ? opt_.quad_theta : std::max(32, 4 * degree_ + 8);
            const int np = 2 * nt;
            const auto gl = quadrature::gauss_legendre(nt, -1.0, 1.0);
            for (int a = 0; a < nt; ++a)
                for (int b = 0; b < np; ++b) {
                    const double phi = 2.0 * std::numbers::pi * b / np;
                    weights_.push_back(gl.weights[a] * 2.0 * std::numbers::pi / np);
                    const std::size_t at = basis_.size();
                    basis_.resize(at + nb_);
                    dtheta_.resize(at + nb_);
                    dphi_.resize(at + nb_);
                    detail::real_harmonics(degree_, gl.nodes[a], phi, &basis_[at], &dtheta_[at], &dphi_[at]);
                }
        } else {
            const int nt = opt_.quad_theta > 0 ? opt_.quad_theta : std::max(64, 8 * degree_ + 16);
            for (int a = 0; a < nt; ++a) {
                const double t = 2.0 * std::numbers::pi * a / nt;
                weights_.push_back(2.0 * std::numbers::pi / nt);
                const std::size_t at = basis_.size();
                basis_.resize(at + nb_);
                dtheta_.resize(at + nb_);
                detail::fourier_basis(degree_, t, &basis_[at], &dtheta_[at]);
            }
        }
    }

    void ensure_grid() const {
        if (convolver_) return;
        const int half = static_cast<int>(std::ceil(opt_.grid_radius / opt_.h));
        const int side = 2 * half + 1;
        const GridSet lattice = GridSet::centered(n_, Index{side, side, side}, opt_.h);
        grid_cells_ = lattice.size();
        grid_inner_.assign(grid_cells_, 0);
        // cells far inside every admissible shape are 1 and skip the series
        const double inner = 0.25;
        for (std::size_t f = 0; f < grid_cells_; ++f) {
            const Index i = lattice.coords(f);
            if (lattice.on_margin(i)) continue;
            const Point p = lattice.center(i);
            const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            if (r > opt_.grid_radius) continue;
            if (r < inner) {
                grid_inner_[f] = 1;
                continue;
            }
            grid_points_.push_back(f);
            grid_radius_.push_back(r);
            const std::size_t at = grid_basis_.size();
            grid_basis_.resize(at + nb_);
            if (n_ == 3)
                detail::real_harmonics(degree_, p[2] / r, std::atan2(p[1], p[0]), &grid_basis_[at], nullptr, nullptr);
            else
                detail::fourier_basis(degree_, std::atan2(p[1], p[0]), &grid_basis_[at], nullptr);
        }
        convolver_ = std::make_unique<RieszConvolver>(k_, n_, lattice.shape(), opt_.h);
    }

    int n_;
    int degree_;
    Kernel k_;
    StarOptions opt_;
    std::size_t nb_;
    std::vector<double> weights_, basis_, dtheta_, dphi_;
    mutable std::size_t grid_cells_ = 0;
    mutable std::vector<std::uint8_t> grid_inner_;
    mutable std::vector<std::size_t> grid_points_;
    mutable std::vector<double> grid_radius_;
    mutable std::vector<double> grid_basis_;
    mutable std::unique_ptr<RieszConvolver> convolver_;
};

/// E_eps of the volume-renormalized shape.
inline EnergyBreakdown star_energy(const StarShape& s, const Kernel& k, double eps, const StarOptions& opt = {}) {
    return StarModel(s.n, s.degree, k, opt).energy(s, eps);
}

/// Coefficients of the renormalized shape's deviation rho_r = scale (1 + rho) - 1
/// at the quadrature nodes, with its L2 and H1-seminorm squares.
struct SobolevNorms {
    double l2 = 0.0;  ///< ||rho_r||_2^2
    double h1 = 0.0;  ///< ||grad rho_r||_2^2
    double sup = 0.0; ///< max |rho_r|
    double lip = 0.0; ///< max |grad rho_r|
};

inline SobolevNorms renormalized_norms(const StarModel& model, const StarShape& s) {
    const double scale = model.volume_scale(model.measures(s));
    const auto rho = model.node_values(s);
    const auto grad = model.node_gradient_norms(s);
    SobolevNorms out;
    CompensatedSum l2, h1;
    for (std::size_t q = 0; q < rho.size(); ++q) {
        const double r = scale * (1.0 + rho[q]) - 1.0;
        const double g = scale * grad[q];
        l2.add(model.weights()[q] * r * r);
        h1.add(model.weights()[q] * g * g);
        out.sup = std::max(out.sup, std::abs(r));
        out.lip = std::max(out.lip, g);
    }
    out.l2 = l2.value();
    out.h1 = h1.value();
    return out;
}

struct StarDescentResult {
    StarShape shape;
    std::vector<double> trace; ///< E_eps after each accepted step
    double initial_energy = 0.0;
    double best_energy = 0.0;
    double rho_sup = 0.0;        ///< max |rho_r| of the final renormalized shape
    double gradient_norm = 0.0;  ///< free-coefficient gradient norm at the end
    double final_step = 0.0;
    int steps = 0;
    bool ball = false;           ///< rho_sup <= 1e-2
    bool non_ball_regime = false;///< rho grew or stayed large: never reported as a minimizer
    bool stalled = false;        ///< gradient no longer computable inside the grid or star domain
};

/// Fixed-step gradient descent on the free coefficients with backtracking
/// halving; stops when the step falls below 1e-8 or after `steps` steps.
inline StarDescentResult star_descent(const StarShape& init, const Kernel& k, double eps, int steps, double step_size,
                                      const StarOptions& opt = {}) {
    require(steps >= 0 && step_size > 0.0, ErrorCode::InvalidArgument, "descent needs steps >= 0 and a positive step");
    StarModel model(init.n, init.degree, k, opt);
    StarDescentResult res;
    StarShape cur = init;
    for (std::size_t i = 0; i < cur.coeffs.size(); ++i)
        if (!cur.free_coefficient(i)) cur.coeffs[i] = 0.0;
    double e = model.energy(cur, eps).E;
    res.initial_energy = e;
    const double sup0 = renormalized_norms(model, cur).sup;
    double step = step_size;
    std::vector<double> g = model.gradient(cur, eps);
    for (int it = 0; it < steps && step >= 1e-8; ++it) {
        bool moved = false;
        while (step >= 1e-8) {
            StarShape trial = cur;
            for (std::size_t i = 0; i < g.size(); ++i) trial.coeffs[i] -= step * g[i];
            double et = std::numeric_limits<double>::infinity();
            try {
                et = model.energy(trial, eps).E;
            } catch (const Error& err) {
                if (err.code() != ErrorCode::NotStarShaped && err.code() != ErrorCode::BoxTooSmall) throw;
            }
            if (et < e) {
                cur = std::move(trial);
                e = et;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        res.trace.push_back(e);
        ++res.steps;
        try {
            g = model.gradient(cur, eps);
        } catch (const Error& err) {
            // the difference stencil left the grid or the star domain: the descent stalls here
            if (err.code() != ErrorCode::NotStarShaped && err.code() != ErrorCode::BoxTooSmall) throw;
            res.stalled = true;
            break;
        }
        double gn = 0.0;
        for (double v : g) gn += v * v;
        if (std::sqrt(gn) < 1e-12) break;
    }
    double gn = 0.0;
    for (double v : g) gn += v * v;
    res.shape = cur;
    res.best_energy = e;
    res.gradient_norm = std::sqrt(gn);
    res.final_step = step;
    res.rho_sup = renormalized_norms(model, cur).sup;
    res.ball = res.rho_sup <= 1e-2;
    res.non_ball_regime = !res.ball && res.rho_sup >= 0.5 * sup0;
    return res;
}

struct GradientCheck {
    double perimeter_error = 0.0; ///< max relative |analytic - FD| over free coefficients
    double nonlocal_ratio = 0.0;  ///< (D(d) - D(d/2)) / (D(d/2) - D(d/4)) for one coefficient
    std::size_t probe = 0;        ///< coefficient used for the nonlocal ratio
    double gauge_gradient = 0.0;  ///< max |gradient| over degree-0/1 coefficients (exactly 0)
};

/// Analytic perimeter gradient against central differences, and the
/// Richardson ratio of the finite-difference nonlocal derivative.
inline GradientCheck gradient_check(const StarShape& s, const Kernel& k, double eps, const StarOptions& opt = {},
                                    double fd_perimeter = 1e-5, double fd_nonlocal = 0.01) {
    StarModel model(s.n, s.degree, k, opt);
    GradientCheck out;
    std::vector<double> g;
    model.normalized_perimeter(s, &g);
    double scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (s.free_coefficient(i)) scale = std::max(scale, std::abs(g[i]));
    scale = std::max(scale, 1e-12);
    double best = -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!s.free_coefficient(i)) continue;
        StarShape a = s, b = s;
        a.coeffs[i] += fd_perimeter;
        b.coeffs[i] -= fd_perimeter;
        const double fd = (model.normalized_perimeter(a) - model.normalized_perimeter(b)) / (2.0 * fd_perimeter);
        // relative to the gradient's scale so vanishing components do not blow up
        out.perimeter_error = std::max(out.perimeter_error, std::abs(fd - g[i]) / scale);
        if (std::abs(s.coeffs[i]) > best) {
            best = std::abs(s.coeffs[i]);
            out.probe = i;
        }
    }
    const auto full = model.gradient(s, eps);
    for (std::size_t i = 0; i < full.size(); ++i)
        if (!s.free_coefficient(i)) out.gauge_gradient = std::max(out.gauge_gradient, std::abs(full[i]));
    if (best >= 0.0) {
        const double d1 = model.nonlocal_derivative(s, out.probe, fd_nonlocal);
        const double d2 = model.nonlocal_derivative(s, out.probe, fd_nonlocal / 2.0);
        const double d4 = model.nonlocal_derivative(s, out.probe, fd_nonlocal / 4.0);
        out.nonlocal_ratio = (d1 - d2) / (d2 - d4);
    }
    return out;
}

/// Random shape with free coefficients only, scaled so that
/// max(sup |rho|, sup |grad rho|) on the quadrature nodes equals `size`.
inline StarShape random_star(const StarModel& model, double size, std::uint64_t seed) {
    Rng rng(seed);
    StarShape s = StarShape::sphere(model.dim(), model.degree());
    for (std::size_t i = 0; i < s.coeffs.size(); ++i)
        if (s.free_coefficient(i)) s.coeffs[i] = rng.normal() / StarShape::mode_degree(s.n, i);
    const auto rho = model.node_values(s);
    const auto grad = model.node_gradient_norms(s);
    double w = 0.0;
    for (std::size_t q = 0; q < rho.size(); ++q) w = std::max({w, std::abs(rho[q]), grad[q]});
    for (auto& c : s.coeffs) c *= size / w;
    return s;
}

struct FugledeReport {
    std::vector<double> ratios; ///< (||rho_r||^2 + ||grad rho_r||^2) / D per sample
    double max_ratio = 0.0;
};

/// Sobolev-to-deficit ratios over random near-spheres with W^{1,inf} size in [0.02, 0.1].
inline FugledeReport fuglede_check(std::size_t samples, const Kernel& k, int degree = 4, std::uint64_t seed = 1,
                                   const StarOptions& opt = {}) {
    require(k.n == 3, ErrorCode::InvalidArgument, "the deficit bound check is for n = 3");
    StarModel model(3, degree, k, opt);
    Rng rng(seed);
    FugledeReport out;
    const double sphere = 3.0 * unit_ball_volume(3);
    for (std::size_t j = 0; j < samples; ++j) {
        const double size = rng.uniform(0.02, 0.1);
        const StarShape s = random_star(model, size, rng.next());
        const double D = model.normalized_perimeter(s) / sphere - 1.0;
        if (!(D > 0.0)) continue; // rho = 0 up to round-off: 0/0
        const SobolevNorms nrm = renormalized_norms(model, s);
        out.ratios.push_back((nrm.l2 + nrm.h1) / D);
        out.max_ratio = std::max(out.max_ratio, out.ratios.back());
    }
    return out;
}

/// D(shape(a rho)) / a^2 for each amplitude a.
inline std::vector<double> deficit_quotients(const StarShape& s, const std::vector<double>& amplitudes,
                                             const StarOptions& opt = {}) {
    StarModel model(s.n, s.degree, Kernel{s.n, 1.0}, opt);
    const double sphere = s.n * unit_ball_volume(s.n);
    std::vector<double> out;
    for (double a : amplitudes) {
        StarShape t = s;
        for (auto& c : t.coeffs) c *= a;
        out.push_back((model.normalized_perimeter(t) / sphere - 1.0) / (a * a));
    }
    return out;
}

} // namespace ldlab
