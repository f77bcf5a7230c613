#pragma once

// Riesz interaction |x - y|^(-alpha) on lattices and on the unit ball.
//
// Lattice convention: a pair of distinct cells i != j interacts through its
// midpoints, K(i - j) = h^(2n) / (h |i - j|)^alpha. The diagonal is the exact
// self-interaction of one cube, K(0) = c_self(n, alpha) h^(2n - alpha), with
// c_self = int_[0,1]^n int_[0,1]^n |x - y|^(-alpha) dx dy. With these,
//
//   u(i) = sum_j K(i - j),   v_F(x_i) = u(i) / h^n,   V(F) = sum_{i in F} u(i).
//
// For a point inside an occupied cell, that cell contributes its mean
// potential over itself, c_self h^(n - alpha), instead of a midpoint term.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ldlab/error.hpp"
#include "ldlab/fft.hpp"
#include "ldlab/geometry.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/parallel.hpp"
#include "ldlab/quadrature.hpp"

namespace ldlab {

struct Kernel {
    int n = 3;
    double alpha = 1.0;

    /// 0 < alpha < n; grid paths additionally need n in {2, 3}.
    void validate(bool grid_path = true) const {
        require(n >= 2, ErrorCode::InvalidKernel, "dimension must be at least 2");
        if (grid_path) require(n == 2 || n == 3, ErrorCode::InvalidKernel, "grid kernels need n in {2, 3}");
        require(alpha > 0.0 && alpha < n && std::isfinite(alpha), ErrorCode::InvalidKernel,
                "alpha must lie in (0, n)");
    }

    bool operator==(const Kernel&) const = default;
};

enum class EnergyMethod { direct, convolution };

// ---------------------------------------------------------------------------
// Self-interaction of a unit cube.
//
// Writing the double integral over the difference z = x - y gives
// 2^n int_[0,1]^n prod(1 - z_i) |z|^-alpha dz. Splitting the cube into the n
// pyramids {z_k = max z} and substituting z = t (s, 1) isolates the
// singularity in a factor t^(n-1-alpha), whose polynomial partner integrates
// in closed form:
//
//   c_self = n 2^n int_[0,1]^(n-1) (1 + |s|^2)^(-alpha/2) Q(s) ds,
//   Q(s)   = int_0^1 t^(n-1-alpha) (1 - t) prod_i (1 - t s_i) dt.
//
// What remains is a smooth integrand on the unit (n-1)-cube.

namespace detail {

inline double duffy_integrand(int n, double alpha, std::span<const double> s) {
    std::vector<double> poly{1.0, -1.0}; // 1 - t
    double norm2 = 1.0;
    for (double si : s) {
        std::vector<double> next(poly.size() + 1, 0.0);
        for (std::size_t j = 0; j < poly.size(); ++j) {
            next[j] += poly[j];
            next[j + 1] -= si * poly[j];
        }
        poly = std::move(next);
        norm2 += si * si;
    }
    double q = 0.0;
    for (std::size_t j = 0; j < poly.size(); ++j) q += poly[j] / (n - alpha + static_cast<double>(j));
    return std::pow(norm2, -0.5 * alpha) * q;
}

} // namespace detail

/// c_self by tensor Gauss-Legendre on the reduced integrand (n <= 3).
inline double self_energy_quadrature(int n, double alpha, int points = 48) {
    Kernel{n, alpha}.validate(true);
    const auto rule = quadrature::gauss_legendre(points, 0.0, 1.0);
    const double prefactor = n * std::pow(2.0, n);
    CompensatedSum sum;
    if (n == 2) {
        for (int i = 0; i < points; ++i) {
            const double s[1] = {rule.nodes[i]};
            sum.add(rule.weights[i] * detail::duffy_integrand(n, alpha, s));
        }
    } else {
        for (int i = 0; i < points; ++i)
            for (int j = 0; j < points; ++j) {
                const double s[2] = {rule.nodes[i], rule.nodes[j]};
                sum.add(rule.weights[i] * rule.weights[j] * detail::duffy_integrand(n, alpha, s));
            }
    }
    return prefactor * sum.value();
}

struct SelfEnergyEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// c_self by plain Monte Carlo on the reduced integrand (any n >= 2).
inline SelfEnergyEstimate self_energy_monte_carlo(int n, double alpha, std::size_t samples, std::uint64_t seed) {
    Kernel{n, alpha}.validate(false);
    Rng rng(seed);
    std::vector<double> s(static_cast<std::size_t>(n - 1));
    CompensatedSum sum, sum2;
    for (std::size_t k = 0; k < samples; ++k) {
        for (auto& si : s) si = rng.uniform();
        const double f = detail::duffy_integrand(n, alpha, s);
        sum.add(f);
        sum2.add(f * f);
    }
    const double prefactor = n * std::pow(2.0, n);
    const double mean = sum.value() / static_cast<double>(samples);
    const double var = std::max(0.0, sum2.value() / static_cast<double>(samples) - mean * mean);
    return {prefactor * mean, prefactor * std::sqrt(var / static_cast<double>(samples))};
}

/**
 * Persistent table of unit-cell self-interaction constants, keyed by
 * (n, alpha, method). Text format, one entry per line after the header:
 *
 *     # ldlab self-energy table v1
 *     # n alpha method value stderr
 *     3 1 quadrature 1.8823... 0
 */
class SelfEnergyTable {
public:
    struct Entry {
        double value = 0.0;
        double stderr_ = 0.0;
    };
    using Key = std::tuple<int, double, std::string>;

    static constexpr const char* kHeader = "# ldlab self-energy table v1";

    SelfEnergyTable() = default;
    SelfEnergyTable(const SelfEnergyTable& other) : entries_(other.entries()) {}
    SelfEnergyTable& operator=(const SelfEnergyTable& other) {
        if (this != &other) {
            auto copy = other.entries();
            std::lock_guard lock(mutex_);
            entries_ = std::move(copy);
        }
        return *this;
    }

    void put(int n, double alpha, const std::string& method, Entry e) {
        std::lock_guard lock(mutex_);
        entries_[{n, alpha, method}] = e;
    }

    /// Value used by the lattice kernels: the quadrature entry, computed on first use.
    double get(int n, double alpha) {
        {
            std::lock_guard lock(mutex_);
            auto it = entries_.find({n, alpha, "quadrature"});
            if (it != entries_.end()) return it->second.value;
        }
        const double v = self_energy_quadrature(n, alpha);
        put(n, alpha, "quadrature", {v, 0.0});
        return v;
    }

    std::map<Key, Entry> entries() const {
        std::lock_guard lock(mutex_);
        return entries_;
    }

    void save(std::ostream& out) const {
        std::lock_guard lock(mutex_);
        out << kHeader << "\n# n alpha method value stderr\n";
        out.precision(17);
        for (const auto& [key, e] : entries_)
            out << std::get<0>(key) << ' ' << std::get<1>(key) << ' ' << std::get<2>(key) << ' ' << e.value << ' '
                << e.stderr_ << "\n";
    }

    static SelfEnergyTable load(std::istream& in) {
        SelfEnergyTable table;
        std::string line;
        require(static_cast<bool>(std::getline(in, line)) && line == kHeader, ErrorCode::Format,
                "self-energy table: missing version header");
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream row(line);
            int n = 0;
            double alpha = 0.0;
            std::string method;
            Entry e;
            require(static_cast<bool>(row >> n >> alpha >> method >> e.value >> e.stderr_), ErrorCode::Format,
                    "self-energy table: malformed row '" + line + "'");
            require(e.value > 0.0, ErrorCode::Format, "self-energy table: non-positive constant");
            table.entries_[{n, alpha, method}] = e;
        }
        return table;
    }

    static SelfEnergyTable& global() {
        static SelfEnergyTable table;
        return table;
    }

private:
    mutable std::mutex mutex_;
    std::map<Key, Entry> entries_;
};

inline double self_energy(int n, double alpha) { return SelfEnergyTable::global().get(n, alpha); }

// ---------------------------------------------------------------------------
// Lattice kernel table indexed by absolute offsets.

class LatticeKernel {
public:
    LatticeKernel() = default;

    /// Covers offsets |d_a| < extent[a].
    LatticeKernel(const Kernel& k, int dim, Index extent, double h) : kernel_(k), dim_(dim), extent_(extent), h_(h) {
        k.validate(true);
        require(k.n == dim, ErrorCode::DimensionMismatch, "kernel dimension differs from grid dimension");
        if (dim == 2) extent_[2] = 1;
        self_ = self_energy(k.n, k.alpha) * std::pow(h, 2.0 * dim - k.alpha);
        scale_ = std::pow(h, 2.0 * dim - k.alpha);
        table_.resize(static_cast<std::size_t>(extent_[0]) * extent_[1] * extent_[2]);
        for (int x = 0; x < extent_[0]; ++x)
            for (int y = 0; y < extent_[1]; ++y)
                for (int z = 0; z < extent_[2]; ++z)
                    table_[(static_cast<std::size_t>(x) * extent_[1] + y) * extent_[2] + z] = pair(x, y, z);
    }

    /// K(d) for any integer offset, computed directly.
    double pair(long dx, long dy, long dz) const {
        const double r2 = static_cast<double>(dx * dx + dy * dy + dz * dz);
        if (r2 == 0.0) return self_;
        return scale_ * std::pow(r2, -0.5 * kernel_.alpha);
    }

    /// K(d) from the table; offsets must lie within the extent.
    double operator()(int dx, int dy, int dz) const {
        return table_[(static_cast<std::size_t>(std::abs(dx)) * extent_[1] + std::abs(dy)) * extent_[2] + std::abs(dz)];
    }

    double self() const { return self_; }
    const Kernel& kernel() const { return kernel_; }
    double spacing() const { return h_; }

private:
    Kernel kernel_;
    int dim_ = 3;
    Index extent_{1, 1, 1};
    double h_ = 1.0;
    double self_ = 0.0;
    double scale_ = 0.0;
    std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// Zero-padded FFT convolution. Buffers are at least 2S-1 per axis, so the
// cyclic convolution equals the linear one on the box: no wrap-around.

class RieszConvolver {
public:
    /// `shift` displaces the source: apply() then returns sum_j K(i - j - shift) rho_j.
    RieszConvolver(const Kernel& k, int dim, Index shape, double h, Index shift = {0, 0, 0})
        : kernel_(k), dim_(dim), shape_(shape), h_(h),
          transform_(dim, padded_dims(dim, shape)) {
        k.validate(true);
        require(k.n == dim, ErrorCode::DimensionMismatch, "kernel dimension differs from grid dimension");
        if (dim == 2) shape_[2] = 1;
        const LatticeKernel table(k, dim, Index{1, 1, 1}, h);
        const auto& P = transform_.dims();
        double* buf = transform_.real();
        std::fill(buf, buf + transform_.real_size(), 0.0);
        auto offset = [&](int p, int axis) -> long {
            // returns LONG_MIN for buffer slots no in-box offset maps to
            if (p <= shape_[axis] - 1) return p;
            if (p >= P[axis] - (shape_[axis] - 1)) return static_cast<long>(p) - P[axis];
            return std::numeric_limits<long>::min();
        };
        for (int x = 0; x < P[0]; ++x) {
            const long dx = offset(x, 0);
            if (dx == std::numeric_limits<long>::min()) continue;
            for (int y = 0; y < P[1]; ++y) {
                const long dy = offset(y, 1);
                if (dy == std::numeric_limits<long>::min()) continue;
                for (int z = 0; z < P[2]; ++z) {
                    const long dz = dim == 3 ? offset(z, 2) : 0;
                    if (dz == std::numeric_limits<long>::min()) continue;
                    buf[(static_cast<std::size_t>(x) * P[1] + y) * P[2] + z] =
                        table.pair(dx - shift[0], dy - shift[1], dz - shift[2]);
                }
            }
        }
        transform_.forward();
        kernel_spectrum_.assign(transform_.spectrum(), transform_.spectrum() + transform_.complex_size());
    }

    static std::array<int, 3> padded_dims(int dim, Index shape) {
        std::array<int, 3> p{1, 1, 1};
        for (int a = 0; a < dim; ++a) p[a] = fft::good_size(2 * shape[a] - 1);
        return p;
    }

    /// u(i) = sum_j K(i - j - shift) rho_j for every cell of the box.
    std::vector<double> apply(std::span<const double> density) {
        const std::size_t cells = static_cast<std::size_t>(shape_[0]) * shape_[1] * shape_[2];
        require(density.size() == cells, ErrorCode::DimensionMismatch, "density size does not match the lattice");
        std::lock_guard lock(use_mutex_);
        const auto& P = transform_.dims();
        double* buf = transform_.real();
        std::fill(buf, buf + transform_.real_size(), 0.0);
        for (int x = 0; x < shape_[0]; ++x)
            for (int y = 0; y < shape_[1]; ++y)
                for (int z = 0; z < shape_[2]; ++z)
                    buf[(static_cast<std::size_t>(x) * P[1] + y) * P[2] + z] =
                        density[(static_cast<std::size_t>(x) * shape_[1] + y) * shape_[2] + z];
        transform_.forward();
        auto* spec = transform_.spectrum();
        for (std::size_t i = 0; i < transform_.complex_size(); ++i) spec[i] *= kernel_spectrum_[i];
        transform_.backward();
        const double norm = 1.0 / static_cast<double>(transform_.real_size());
        std::vector<double> out(cells);
        for (int x = 0; x < shape_[0]; ++x)
            for (int y = 0; y < shape_[1]; ++y)
                for (int z = 0; z < shape_[2]; ++z)
                    out[(static_cast<std::size_t>(x) * shape_[1] + y) * shape_[2] + z] =
                        norm * buf[(static_cast<std::size_t>(x) * P[1] + y) * P[2] + z];
        return out;
    }

    /// sum_i rho_i u(i) with u = apply(rho): the interaction energy of a density.
    double energy(std::span<const double> density) {
        const auto u = apply(density);
        CompensatedSum total;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (density[i] != 0.0) total.add(density[i] * u[i]);
        return total.value();
    }

    const Index& shape() const { return shape_; }
    double spacing() const { return h_; }
    const Kernel& kernel() const { return kernel_; }

private:
    Kernel kernel_;
    int dim_;
    Index shape_;
    double h_;
    fft::RealTransform transform_;
    std::vector<std::complex<double>> kernel_spectrum_;
    std::mutex use_mutex_;
};

namespace detail {

inline void check_kernel_for(const GridSet& s, const Kernel& k) {
    k.validate(true);
    require(k.n == s.dim(), ErrorCode::DimensionMismatch, "kernel dimension differs from grid dimension");
}

inline std::vector<double> indicator(const GridSet& s) {
    std::vector<double> rho(s.size());
    for (std::size_t f = 0; f < s.size(); ++f) rho[f] = s.occupied(f) ? 1.0 : 0.0;
    return rho;
}

inline std::vector<Index> occupied_coords(const GridSet& s) {
    std::vector<Index> out;
    for (std::size_t f = 0; f < s.size(); ++f)
        if (s.occupied(f)) out.push_back(s.coords(f));
    return out;
}

} // namespace detail

/// v_F(x) at an arbitrary point.
inline double potential_at(const GridSet& s, const Kernel& k, const Point& x) {
    detail::check_kernel_for(s, k);
    const double h = s.spacing();
    const double hn = s.cell_volume();
    // cell whose cube contains x, if any
    Index host{0, 0, 0};
    bool inside_box = true;
    for (int a = 0; a < s.dim(); ++a) {
        host[a] = static_cast<int>(std::lround((x[a] - s.origin()[a]) / h));
        if (host[a] < 0 || host[a] >= s.shape()[a]) inside_box = false;
    }
    const bool in_occupied = inside_box && s.occupied(host);
    CompensatedSum total;
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        const Index i = s.coords(f);
        if (in_occupied && i == host) {
            total.add(self_energy(k.n, k.alpha) * std::pow(h, s.dim() - k.alpha));
            continue;
        }
        const Point c = s.center(i);
        double r2 = 0.0;
        for (int a = 0; a < s.dim(); ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
        total.add(hn * std::pow(r2, -0.5 * k.alpha));
    }
    return total.value();
}

/// v_F at every cell center of the lattice.
inline std::vector<double> potential_field(const GridSet& s, const Kernel& k,
                                           EnergyMethod method = EnergyMethod::convolution) {
    detail::check_kernel_for(s, k);
    const double inv_hn = 1.0 / s.cell_volume();
    if (method == EnergyMethod::convolution) {
        RieszConvolver conv(k, s.dim(), s.shape(), s.spacing());
        auto u = conv.apply(detail::indicator(s));
        for (auto& v : u) v *= inv_hn;
        return u;
    }
    const LatticeKernel table(k, s.dim(), s.shape(), s.spacing());
    const auto occ = detail::occupied_coords(s);
    std::vector<double> out(s.size(), 0.0);
    parallel_for((s.size() + 4095) / 4096, [&](std::size_t block) {
        for (std::size_t f = block * 4096; f < std::min(s.size(), (block + 1) * 4096); ++f) {
            const Index i = s.coords(f);
            CompensatedSum u;
            for (const auto& j : occ) u.add(table(i[0] - j[0], i[1] - j[1], i[2] - j[2]));
            out[f] = u.value() * inv_hn;
        }
    });
    return out;
}

/// V(F) = sum over ordered pairs of occupied cells of K(i - j), diagonal included once.
inline double nonlocal_energy(const GridSet& s, const Kernel& k, EnergyMethod method = EnergyMethod::convolution) {
    detail::check_kernel_for(s, k);
    if (s.empty()) return 0.0;
    if (method == EnergyMethod::convolution) {
        RieszConvolver conv(k, s.dim(), s.shape(), s.spacing());
        return conv.energy(detail::indicator(s));
    }
    const LatticeKernel table(k, s.dim(), s.shape(), s.spacing());
    const auto occ = detail::occupied_coords(s);
    const double off_diagonal = chunked_sum(occ.size(), [&](std::size_t lo, std::size_t hi) {
        CompensatedSum part;
        for (std::size_t a = lo; a < hi; ++a) {
            const Index& i = occ[a];
            double row = 0.0;
            for (std::size_t b = a + 1; b < occ.size(); ++b) {
                const Index& j = occ[b];
                row += table(i[0] - j[0], i[1] - j[1], i[2] - j[2]);
            }
            part.add(row);
        }
        return part.value();
    });
    return 2.0 * off_diagonal + static_cast<double>(occ.size()) * table.self();
}

/// Interaction int_A int_{B + shift h} |x - y|^-alpha for two sets on the same
/// lattice, with B displaced by an integer cell offset (which may leave the box).
inline double cross_energy(const GridSet& a, const GridSet& b, const Kernel& k, Index shift,
                           EnergyMethod method = EnergyMethod::convolution) {
    detail::check_kernel_for(a, k);
    require(a.same_lattice(b), ErrorCode::DimensionMismatch, "cross_energy needs both sets on one lattice");
    if (a.empty() || b.empty()) return 0.0;
    if (method == EnergyMethod::convolution) {
        RieszConvolver conv(k, a.dim(), a.shape(), a.spacing(), shift);
        const auto u = conv.apply(detail::indicator(b));
        CompensatedSum total;
        for (std::size_t f = 0; f < a.size(); ++f)
            if (a.occupied(f)) total.add(u[f]);
        return total.value();
    }
    const LatticeKernel table(k, a.dim(), Index{1, 1, 1}, a.spacing());
    const auto pa = detail::occupied_coords(a);
    const auto pb = detail::occupied_coords(b);
    return chunked_sum(pa.size(), [&](std::size_t lo, std::size_t hi) {
        CompensatedSum part;
        for (std::size_t x = lo; x < hi; ++x)
            for (const auto& j : pb)
                part.add(table.pair(j[0] + shift[0] - pa[x][0], j[1] + shift[1] - pa[x][1], j[2] + shift[2] - pa[x][2]));
        return part.value();
    });
}

/// RHS - LHS of V(F) - V(G) <= 2 ( int_{F\G} (v_F - c) - int_{G\F} (v_F - c) ).
/// Non-negative whenever the lattice kernel is positive definite.
inline double posdef_gap(const GridSet& f, const GridSet& g, const Kernel& k, double c) {
    detail::check_kernel_for(f, k);
    require(f.same_lattice(g), ErrorCode::DimensionMismatch, "posdef_gap needs both sets on one lattice");
    const long diff = static_cast<long>(f.count()) - static_cast<long>(g.count());
    require(std::abs(diff) <= 1, ErrorCode::MassMismatch, "volumes differ by more than one cell");
    RieszConvolver conv(k, f.dim(), f.shape(), f.spacing());
    const auto rho_f = detail::indicator(f);
    const auto rho_g = detail::indicator(g);
    const auto u_f = conv.apply(rho_f);
    const double hn = f.cell_volume();
    CompensatedSum rhs, vf, vg;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double v = u_f[i] / hn - c;
        if (rho_f[i] != 0.0 && rho_g[i] == 0.0) rhs.add(2.0 * hn * v);
        if (rho_g[i] != 0.0 && rho_f[i] == 0.0) rhs.add(-2.0 * hn * v);
        if (rho_f[i] != 0.0) vf.add(u_f[i]);
    }
    const double v_g = conv.energy(rho_g);
    return rhs.value() - (vf.value() - v_g);
}

// ---------------------------------------------------------------------------
// Potential of the unit ball by radial quadrature.
//
// v_B(s) = int_0^1 r^(n-1) A(r, s) dr, where A is the integral of the kernel
// over the sphere of radius r seen from distance s:
//   A(r, s) = |S^(n-2)| int_0^pi (s^2 + r^2 - 2 s r cos t)^(-alpha/2) sin^(n-2) t dt,
// which for n = 3 is 2 pi [(s + r)^(2-alpha) - |s - r|^(2-alpha)] / (s r (2 - alpha))
// (a logarithm when alpha = 2).
//
// Other dimensions integrate along rays instead: from a point at distance s
// every ray meets the sphere at distances rho(t), and
//   v_B(s) = |S^(n-2)| int rho(t)^(n-alpha) / (n - alpha) sin^(n-2) t dt,
// a single smooth integral (difference of two chord ends outside the ball).

namespace detail {

inline double sphere_area(int dim_of_sphere_plus_one) {
    const double n = dim_of_sphere_plus_one;
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// A(r, s) with the gap |s - r| passed separately so it keeps full precision.
inline double shell_average(const Kernel& k, double r, double s, double gap) {
    // far from the shell the average is |S^(n-1)| max(r, s)^-alpha up to O((min/max)^2)
    const double lo = std::min(r, s), hi = std::max(r, s);
    if (lo <= 1e-7 * hi) return sphere_area(k.n) * std::pow(hi, -k.alpha);
    if (k.n == 3) {
        if (std::abs(k.alpha - 2.0) < 1e-14) return 2.0 * std::numbers::pi / (s * r) * std::log((s + r) / gap);
        const double e = 2.0 - k.alpha;
        return 2.0 * std::numbers::pi * (std::pow(s + r, e) - std::pow(gap, e)) / (s * r * e);
    }
    const double c = sphere_area(k.n - 1);
    // |x - y|^2 = gap^2 + 2 s r (1 - cos t) = gap^2 + 4 s r sin^2(t/2)
    const double chord = 2.0 * std::sqrt(s * r);
    auto f = [&](double t) {
        const double d = std::hypot(gap, chord * std::sin(0.5 * t));
        if (d == 0.0) return 0.0; // underflow at an endpoint abscissa; the set has measure zero
        return std::pow(d, -k.alpha) * std::pow(std::sin(t), k.n - 2);
    };
    // the integrand varies on the scale t ~ gap / chord; split there
    const double knee = std::min(0.5 * std::numbers::pi, 4.0 * gap / chord);
    auto near = [&](double w) { return knee * f(knee * w); };
    return c * (quadrature::tanh_sinh(near, 0.0, 1.0, 1e-9) + quadrature::tanh_sinh(f, knee, std::numbers::pi, 1e-9));
}

inline double ray_potential(const Kernel& k, double s) {
    const double p = k.n - k.alpha;
    const double c = sphere_area(k.n - 1) / p;
    if (s <= 1.0) {
        // t is the angle to the outward radial direction
        auto f = [&](double t) {
            const double ct = std::cos(t), st = std::sin(t);
            const double q = std::sqrt(std::max(0.0, 1.0 - s * s * st * st));
            const double rho = ct > 0.0 ? (1.0 - s) * (1.0 + s) / (q + s * ct) : q - s * ct;
            return std::pow(rho, p) * std::pow(st, k.n - 2);
        };
        return c * quadrature::tanh_sinh(f, 0.0, std::numbers::pi, 1e-12);
    }
    // t is the angle to the inward radial direction; rays beyond asin(1/s) miss
    const double edge = std::asin(1.0 / s);
    auto f = [&](double t) {
        const double ct = std::cos(t), st = std::sin(t);
        const double q = std::sqrt(std::max(0.0, 1.0 - s * s * st * st));
        const double far = s * ct + q;
        const double near = (s - 1.0) * (s + 1.0) / far;
        return (std::pow(far, p) - std::pow(near, p)) * std::pow(st, k.n - 2);
    };
    return c * quadrature::tanh_sinh(f, 0.0, edge, 1e-12);
}

} // namespace detail

/// v_B(s) for the unit ball at distance s from its center.
inline double ball_potential(const Kernel& k, double s) {
    k.validate(false);
    require(s >= 0.0, ErrorCode::InvalidArgument, "radius must be non-negative");
    // v_B is even and smooth at the center, so tiny radii take the central value
    if (s < 1e-8) return detail::sphere_area(k.n) / (k.n - k.alpha);
    if (k.n != 3) return detail::ray_potential(k, s);
    if (s < 1.0) {
        // split at the singular shell r = s; integrate in the distance to it
        auto inner = [&](double u) { // r = s - u
            const double r = s - u;
            return std::pow(r, k.n - 1) * detail::shell_average(k, r, s, u);
        };
        auto outer = [&](double u) { // r = s + u
            const double r = s + u;
            return std::pow(r, k.n - 1) * detail::shell_average(k, r, s, u);
        };
        return quadrature::tanh_sinh(inner, 0.0, s, 1e-10) + quadrature::tanh_sinh(outer, 0.0, 1.0 - s, 1e-10);
    }
    const double delta = s - 1.0;
    auto f = [&](double u) { // r = 1 - u, gap = delta + u
        const double r = 1.0 - u;
        return std::pow(r, k.n - 1) * detail::shell_average(k, r, s, delta + u);
    };
    return quadrature::tanh_sinh(f, 0.0, 1.0, 1e-10);
}

/// V(B_1) = n omega_n int_0^1 s^(n-1) v_B(s) ds.
inline double ball_self_energy(const Kernel& k) {
    k.validate(false);
    static std::mutex cache_mutex;
    static std::map<std::pair<int, double>, double> cache;
    {
        std::lock_guard lock(cache_mutex);
        auto it = cache.find({k.n, k.alpha});
        if (it != cache.end()) return it->second;
    }
    auto f = [&](double s) { return std::pow(s, k.n - 1) * ball_potential(k, s); };
    const double v = k.n * unit_ball_volume(k.n) * quadrature::tanh_sinh(f, 0.0, 1.0, 1e-9);
    std::lock_guard lock(cache_mutex);
    cache[{k.n, k.alpha}] = v;
    return v;
}

struct ProfileSample {
    double radius = 0.0;
    double potential = 0.0;
};

/// v_B sampled at `samples` equally spaced radii in [0, r_out].
inline std::vector<ProfileSample> ball_profile(const Kernel& k, double r_out, int samples) {
    k.validate(false);
    require(samples >= 2 && r_out > 0.0, ErrorCode::InvalidArgument, "profile needs r_out > 0 and >= 2 samples");
    std::vector<ProfileSample> out(static_cast<std::size_t>(samples));
    parallel_for(out.size(), [&](std::size_t i) {
        const double r = r_out * static_cast<double>(i) / (samples - 1);
        out[i] = {r, ball_potential(k, r)};
    });
    return out;
}

/// Least-squares slope of log(v_0 - v_B(1 + r)) against log r over
/// log-spaced r in [r_min, r_max].
inline double boundary_exponent(const Kernel& k, double r_min, double r_max, int points = 9) {
    k.validate(false);
    const double v0 = ball_potential(k, 1.0);
    std::vector<double> xs, ys;
    for (int i = 0; i < points; ++i) {
        const double r = r_min * std::pow(r_max / r_min, static_cast<double>(i) / (points - 1));
        xs.push_back(std::log(r));
        ys.push_back(std::log(v0 - ball_potential(k, 1.0 + r)));
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / points;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / points;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < points; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

/// (v_0 - v_B(1 + r)) / (r ln(1/r)) at log-spaced r in [r_min, r_max]; for
/// alpha = n - 1 this approaches a constant.
inline std::vector<double> boundary_log_ratios(const Kernel& k, double r_min, double r_max, int points = 5) {
    k.validate(false);
    const double v0 = ball_potential(k, 1.0);
    std::vector<double> out;
    for (int i = 0; i < points; ++i) {
        const double r = r_min * std::pow(r_max / r_min, static_cast<double>(i) / (points - 1));
        out.push_back((v0 - ball_potential(k, 1.0 + r)) / (r * std::log(1.0 / r)));
    }
    return out;
}

} // namespace ldlab
