#pragma once

// Scripted studies over competitor families: fission crossover, scaling of
// the minimal energy, equipartition, diameter and density bounds, and the
// hyperplane-cut inequality.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ldlab/competitors.hpp"
#include "ldlab/energy.hpp"
#include "ldlab/error.hpp"
#include "ldlab/fft.hpp"
#include "ldlab/geometry.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/riesz.hpp"
#include "ldlab/shapes.hpp"

namespace ldlab {

struct Candidate {
    std::string id;
    EnergyBreakdown energy;
};

/// One mass of a sweep: every evaluated competitor and the cheapest one.
struct SweepRecord {
    double m = 0.0;
    std::string best;
    std::vector<Candidate> candidates;
    Kernel kernel;
    double h = 0.0; ///< 0 for oracle-only records

    const Candidate& best_candidate() const {
        for (const auto& c : candidates)
            if (c.id == best) return c;
        throw Error(ErrorCode::InvalidArgument, "record has no candidates");
    }
};

namespace detail {

inline void pick_best(SweepRecord& r) {
    double e = std::numeric_limits<double>::infinity();
    for (const auto& c : r.candidates)
        if (c.energy.E < e) {
            e = c.energy.E;
            r.best = c.id;
        }
}

/// Oracle breakdown of N separated equal balls of total mass m.
inline EnergyBreakdown chain_breakdown(const BallOracle& oracle, double m, int balls) {
    const EnergyBreakdown one = oracle.breakdown(m / balls);
    return {balls * one.P, balls * one.V, balls * one.E, m, oracle.kernel()};
}

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iter = 200) {
    double flo = f(lo);
    const double fhi = f(hi);
    require(flo * fhi <= 0.0, ErrorCode::PreconditionFailed, "bisection bracket does not change sign");
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Fission crossover.

struct FissionRow {
    double m = 0.0;
    int best_balls = 1;
    std::vector<double> energies; ///< N e(m / N) for N = 1 .. ceil(m) + 1
};

struct FissionTable {
    std::vector<FissionRow> rows;
    double crossover_closed_form = 0.0; ///< m* from the oracle constants
    double crossover_bisection = 0.0;   ///< root of e(m) - 2 e(m/2)
    bool monotone = true;               ///< optimal N nondecreasing in m
};

inline FissionTable fission_scan(const Kernel& k, const std::vector<double>& masses) {
    const BallOracle oracle(k);
    FissionTable t;
    t.crossover_closed_form = oracle.two_ball_crossover();
    t.crossover_bisection = detail::bisect(
        [&](double m) { return oracle.energy(m) - 2.0 * oracle.energy(0.5 * m); }, 1e-3, 1e3, 1e-12);
    double prev = 0.0;
    for (double m : masses) {
        require(m > prev, ErrorCode::InvalidArgument, "masses must be positive and ascending");
        prev = m;
        FissionRow row;
        row.m = m;
        double best = std::numeric_limits<double>::infinity();
        const int top = chain_count(m) + 1;
        for (int N = 1; N <= top; ++N) {
            row.energies.push_back(chain_energy_oracle(oracle, m, N, std::numeric_limits<double>::infinity()));
            if (row.energies.back() < best) {
                best = row.energies.back();
                row.best_balls = N;
            }
        }
        if (!t.rows.empty() && row.best_balls < t.rows.back().best_balls) t.monotone = false;
        t.rows.push_back(std::move(row));
    }
    return t;
}

struct GridCrossover {
    double spacing_factor = 10.0;
    double crossover_near = 0.0; ///< root of E(ball) - E(2-chain) at R = factor x diam
    double crossover_far = 0.0;  ///< same at twice the spacing
    double crossover = 0.0;      ///< Richardson extrapolation to R = infinity
    double oracle = 0.0;         ///< closed-form m*
    double relative_error = 0.0;
    int evaluations = 0;
};

/// Grid-energy 1 -> 2 ball crossover. The pair interaction of the two balls
/// decays like R^-alpha, so the roots at R and 2R are extrapolated to
/// separated balls: m_inf = (2^alpha m(2R) - m(R)) / (2^alpha - 1).
inline GridCrossover grid_crossover(const Kernel& k, double h, double spacing_factor = 10.0, double lo = 1.0,
                                    double hi = 2.6, const EnergyOptions& opt = {}) {
    k.validate(true);
    GridCrossover g;
    g.spacing_factor = spacing_factor;
    g.oracle = BallOracle(k).two_ball_crossover();
    const double cell = std::pow(h, k.n);
    auto root = [&](double factor) {
        auto f = [&](double m) {
            ++g.evaluations;
            const GridSet ball = make_ball(k.n, m, h);
            return total_energy(ball, k, opt).E - chain_energy(k, m, h, factor, 2, opt).E;
        };
        // cell-count resolution is the finest meaningful bracket
        return detail::bisect(f, lo, hi, 2.0 * cell, 60);
    };
    g.crossover_near = root(spacing_factor);
    g.crossover_far = root(2.0 * spacing_factor);
    const double q = std::pow(2.0, k.alpha);
    g.crossover = (q * g.crossover_far - g.crossover_near) / (q - 1.0);
    g.relative_error = std::abs(g.crossover - g.oracle) / g.oracle;
    return g;
}

// ---------------------------------------------------------------------------
// Scaling of the minimal energy.

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

/// Least-squares line through (log x, log y).
inline SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument, "fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    SlopeFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    f.points = x.size();
    return f;
}

/// Oracle competitors at mass m: the ball and separated chains N = 2 .. ceil(m) + 1.
inline SweepRecord oracle_record(const BallOracle& oracle, double m) {
    SweepRecord r;
    r.m = m;
    r.kernel = oracle.kernel();
    r.candidates.push_back({"ball", oracle.breakdown(m)});
    const int top = chain_count(m) + 1;
    for (int N = 2; N <= top; ++N) r.candidates.push_back({"chain" + std::to_string(N), detail::chain_breakdown(oracle, m, N)});
    detail::pick_best(r);
    return r;
}

struct ScalingReport {
    std::vector<SweepRecord> records;
    SlopeFit small;     ///< m <= small_limit
    SlopeFit large;     ///< m >= large_limit
    double small_limit = 0.0;
    double large_limit = 0.0;
    double c_lower = 0.0; ///< min E / max{m^((n-1)/n), m}
    double c_upper = 0.0; ///< max of the same
    double interpolation_constant = 0.0; ///< max interpolation ratio over all candidates
};

/// Log-spaced masses from lo to hi, `per_decade` points per decade, ends included.
inline std::vector<double> log_masses(double lo, double hi, int per_decade) {
    require(lo > 0.0 && hi > lo && per_decade >= 1, ErrorCode::InvalidArgument, "bad mass range");
    const int steps = std::max(1, static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade)));
    std::vector<double> out;
    for (int i = 0; i <= steps; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / steps));
    return out;
}

/// Best-competitor energy over masses; slopes fitted on m <= 0.1 m* and m >= 10 m*.
inline ScalingReport scaling_sweep(const Kernel& k, const std::vector<double>& masses,
                                   const std::vector<SweepRecord>& extra = {}) {
    const BallOracle oracle(k);
    ScalingReport rep;
    const double ms = oracle.two_ball_crossover();
    rep.small_limit = 0.1 * ms;
    rep.large_limit = 10.0 * ms;
    for (double m : masses) rep.records.push_back(oracle_record(oracle, m));
    for (const auto& e : extra) {
        // grid or annealed candidates join the oracle record of the same mass
        auto it = std::find_if(rep.records.begin(), rep.records.end(),
                               [&](const SweepRecord& r) { return std::abs(r.m - e.m) <= 1e-12 * e.m; });
        if (it == rep.records.end()) {
            rep.records.push_back(e);
            it = rep.records.end() - 1;
        } else {
            it->candidates.insert(it->candidates.end(), e.candidates.begin(), e.candidates.end());
        }
        detail::pick_best(*it);
    }
    std::sort(rep.records.begin(), rep.records.end(), [](const auto& a, const auto& b) { return a.m < b.m; });
    std::vector<double> xs, ys, xl, yl;
    rep.c_lower = std::numeric_limits<double>::infinity();
    for (const auto& r : rep.records) {
        const double e = r.best_candidate().energy.E;
        if (r.m <= rep.small_limit) {
            xs.push_back(r.m);
            ys.push_back(e);
        }
        if (r.m >= rep.large_limit) {
            xl.push_back(r.m);
            yl.push_back(e);
        }
        const double ref = std::max(std::pow(r.m, (k.n - 1.0) / k.n), r.m);
        rep.c_lower = std::min(rep.c_lower, e / ref);
        rep.c_upper = std::max(rep.c_upper, e / ref);
        for (const auto& c : r.candidates)
            rep.interpolation_constant = std::max(rep.interpolation_constant,
                                                  interpolation_ratio(c.energy.m, c.energy.P, c.energy.V, k));
    }
    if (xs.size() >= 2) rep.small = loglog_fit(xs, ys);
    if (xl.size() >= 2) rep.large = loglog_fit(xl, yl);
    return rep;
}

// ---------------------------------------------------------------------------
// Equipartition.

struct EquipartitionRow {
    double m = 0.0;
    double P = 0.0;
    double V = 0.0;
    double min_ratio = 0.0; ///< min{P, V} / m
    double max_ratio = 0.0; ///< max{P, V} / m
};

struct EquipartitionReport {
    std::vector<EquipartitionRow> rows;
    double beta = 0.0;
    double c_fit = 0.0;   ///< min over rows of min{P, V} / m
    double spread = 0.0;  ///< max / min of min{P, V} / m, minus 1
    std::size_t upper_violations = 0; ///< rows with max{P, V} > beta m
};

/// min{P, V} / m over candidates of mass >= 1. Each candidate must satisfy
/// E <= beta m (PreconditionFailed otherwise).
inline EquipartitionReport equipartition_check(const std::vector<EnergyBreakdown>& candidates, double beta) {
    require(beta > 0.0, ErrorCode::InvalidArgument, "beta must be positive");
    EquipartitionReport rep;
    rep.beta = beta;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& c : candidates) {
        require(c.m >= 1.0, ErrorCode::InvalidArgument, "equipartition candidates need m >= 1");
        require(c.E <= beta * c.m, ErrorCode::PreconditionFailed,
                "candidate of mass " + std::to_string(c.m) + " has E > beta m");
        EquipartitionRow r{c.m, c.P, c.V, std::min(c.P, c.V) / c.m, std::max(c.P, c.V) / c.m};
        if (r.max_ratio > beta) ++rep.upper_violations;
        lo = std::min(lo, r.min_ratio);
        hi = std::max(hi, r.min_ratio);
        rep.rows.push_back(r);
    }
    if (!rep.rows.empty()) {
        rep.c_fit = lo;
        rep.spread = hi / lo - 1.0;
    }
    return rep;
}

/// Chains of ceil(m) balls: oracle energies (h = 0, separated balls) or grid
/// energies at the given spacing factor.
inline std::vector<EnergyBreakdown> chain_candidates(const Kernel& k, const std::vector<double>& masses, double h = 0.0,
                                                     double spacing_factor = 10.0) {
    const BallOracle oracle(k);
    std::vector<EnergyBreakdown> out;
    for (double m : masses)
        out.push_back(h > 0.0 ? chain_energy(k, m, h, spacing_factor)
                              : detail::chain_breakdown(oracle, m, chain_count(m)));
    return out;
}

// ---------------------------------------------------------------------------
// Diameter bounds.

struct DiameterSample {
    std::string id;
    double m = 0.0;
    double diameter = 0.0;
    double V = 0.0; ///< nonlocal energy, for m^2 / d^alpha <= V
};

struct DiameterReport {
    double c_lower = 0.0; ///< min diameter / m^(1/alpha)
    double c_upper = 0.0; ///< max diameter / m
    std::vector<std::string> energy_violations; ///< samples with m^2 / d^alpha > V
};

/// Fits c m^(1/alpha) <= diameter <= C m over samples with m >= 1.
inline DiameterReport diameter_bounds_check(const std::vector<DiameterSample>& samples, const Kernel& k) {
    DiameterReport rep;
    rep.c_lower = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        require(s.m >= 1.0 && s.diameter > 0.0, ErrorCode::InvalidArgument, "diameter samples need m >= 1 and d > 0");
        rep.c_lower = std::min(rep.c_lower, s.diameter / std::pow(s.m, 1.0 / k.alpha));
        rep.c_upper = std::max(rep.c_upper, s.diameter / s.m);
        // every pair is at most d apart, so V >= m^2 / d^alpha; small slack for estimator noise
        if (s.V > 0.0 && s.m * s.m / std::pow(s.diameter, k.alpha) > s.V * (1.0 + 1e-9)) rep.energy_violations.push_back(s.id);
    }
    return rep;
}

inline DiameterSample diameter_sample(const std::string& id, const GridSet& s, const Kernel& k) {
    return {id, volume(s), essential_diameter(s), nonlocal_energy(s, k)};
}

/// Chain diameter from the construction: (N - 1) R + 2 r.
inline DiameterSample chain_diameter_sample(const Kernel& k, double m, double spacing_factor = 10.0) {
    const BallOracle oracle(k);
    const int N = chain_count(m);
    const double r = ball_radius(k.n, m / N);
    const double R = spacing_factor * 2.0 * r;
    const EnergyBreakdown e = detail::chain_breakdown(oracle, m, N);
    double V = e.V;
    for (int d = 1; d < N; ++d) V += 2.0 * (N - d) * (m / N) * (m / N) / std::pow(d * R, k.alpha);
    return {"chain" + std::to_string(N), m, (N - 1) * R + 2.0 * r, V};
}

// ---------------------------------------------------------------------------
// Uniform density bound: |F ∩ B_1(x)| over x in F.

struct DensityReport {
    std::size_t samples = 0;
    double min_mass = 0.0;     ///< min |F ∩ B_1(x)|
    double min_fraction = 0.0; ///< min_mass / min{1, m}
    Point location{0.0, 0.0, 0.0};
    bool flagged = false;      ///< min_fraction < threshold
};

/// Local masses at every occupied cell (or the boundary cells when
/// boundary_only), from one FFT correlation with the unit-ball stencil.
inline DensityReport density_bound_check(const GridSet& s, double threshold = 0.1, bool boundary_only = true) {
    DensityReport rep;
    if (s.empty()) return rep;
    const int n = s.dim();
    const double h = s.spacing();
    const int rad = static_cast<int>(std::floor(1.0 / h + 1e-9));
    std::array<int, 3> P{1, 1, 1};
    for (int a = 0; a < n; ++a) P[a] = fft::good_size(s.shape()[a] + 2 * rad + 1);
    fft::RealTransform ta(n, P), tb(n, P);
    std::fill(ta.real(), ta.real() + ta.real_size(), 0.0);
    std::fill(tb.real(), tb.real() + tb.real_size(), 0.0);
    auto at = [&](int x, int y, int z) {
        auto wrap = [&](int v, int p) { return ((v % p) + p) % p; };
        return (static_cast<std::size_t>(wrap(x, P[0])) * P[1] + wrap(y, P[1])) * P[2] + wrap(z, P[2]);
    };
    for (std::size_t f = 0; f < s.size(); ++f)
        if (s.occupied(f)) {
            const Index c = s.coords(f);
            ta.real()[at(c[0], c[1], c[2])] = 1.0;
        }
    const int rz = n == 3 ? rad : 0;
    // closed unit ball in cell units; the slack keeps exact lattice radii inside
    const double r2 = 1.0 / (h * h) + 1e-9;
    for (int x = -rad; x <= rad; ++x)
        for (int y = -rad; y <= rad; ++y)
            for (int z = -rz; z <= rz; ++z)
                if (x * x + y * y + z * z <= r2) tb.real()[at(x, y, z)] = 1.0;
    ta.forward();
    tb.forward();
    // the stencil is symmetric, so convolution equals correlation
    for (std::size_t i = 0; i < ta.complex_size(); ++i) ta.spectrum()[i] *= tb.spectrum()[i];
    ta.backward();
    const double norm = 1.0 / static_cast<double>(ta.real_size());
    std::vector<std::size_t> sites;
    if (boundary_only)
        sites = boundary_cells(s);
    else
        sites = s.occupied_indices();
    rep.min_mass = std::numeric_limits<double>::infinity();
    for (std::size_t f : sites) {
        const Index c = s.coords(f);
        const double count = std::round(ta.real()[at(c[0], c[1], c[2])] * norm);
        const double mass = count * s.cell_volume();
        ++rep.samples;
        if (mass < rep.min_mass) {
            rep.min_mass = mass;
            rep.location = s.center(c);
        }
    }
    rep.min_fraction = rep.min_mass / std::min(1.0, volume(s));
    rep.flagged = rep.min_fraction < threshold;
    return rep;
}

// ---------------------------------------------------------------------------
// Hyperplane-cut inequality 2 rho(t) >= (m / (2 d^alpha)) U(t) and profitable splits.

struct CutRow {
    double t = 0.0;
    double U = 0.0;
    double rho = 0.0;
    double lhs = 0.0; ///< 2 rho(t)
    double rhs = 0.0; ///< m U(t) / (2 d^alpha)
    bool inequality_fails = false;
    std::vector<double> split_energy; ///< E(split at t, R) per R of the schedule
    bool profitable = false;          ///< some R with E(split) < E(s)
    double far_field_ratio = 0.0;     ///< V-gain(R) / V-gain(2R) for the first two R
};

struct CutReport {
    int axis = 0;
    double diameter = 0.0;
    double m = 0.0;
    double energy = 0.0;
    std::vector<double> R;
    std::vector<CutRow> rows;
    bool U_monotone = true;
    double U_total = 0.0; ///< U(extent), equals m
    bool any_profitable = false;
    std::size_t inequality_failures = 0;
    double best_t = 0.0;
    double best_gain = 0.0; ///< max over rows and R of E(s) - E(split)
};

/// Scans lattice cuts t in [d/4, d/2] along `axis` (t measured from the
/// bounding-box minimum). The axis is reflected when needed so U(d/2) <= m/2.
/// R values are multiples of the diameter.
inline CutReport cut_inequality_probe(const GridSet& input, const Kernel& k, int axis = 0,
                                      const std::vector<double>& R_factors = {10.0, 20.0},
                                      const EnergyOptions& opt = {}) {
    require(!input.empty(), ErrorCode::EmptySet, "cut probe on an empty set");
    detail::check_kernel_for(input, k);
    detail::check_axis(input, axis);
    CutReport rep;
    rep.axis = axis;
    rep.m = volume(input);
    rep.diameter = essential_diameter(input);
    const double h = input.spacing();
    const BoundingBox box0 = bounding_box(input);
    const double extent = h * (box0.hi[axis] - box0.lo[axis] + 1);

    GridSet s = input;
    if (cross_section_mass(input, axis, 0.5 * rep.diameter) > 0.5 * rep.m) {
        // mirror along the axis so the lower half holds at most half the mass
        s = input.empty_like();
        for (std::size_t f = 0; f < input.size(); ++f) {
            if (!input.occupied(f)) continue;
            Index c = input.coords(f);
            c[axis] = box0.lo[axis] + box0.hi[axis] - c[axis];
            s.set(c, true);
        }
    }
    rep.energy = total_energy(s, k, opt).E;
    for (double f : R_factors) rep.R.push_back(f * rep.diameter);
    rep.U_total = cross_section_mass(s, axis, extent);

    const double d = rep.diameter;
    const int first = static_cast<int>(std::ceil(0.25 * d / h - 1e-9));
    const int last = static_cast<int>(std::floor(0.5 * d / h + 1e-9));
    double prevU = -1.0;
    for (int j = std::max(first, 1); j <= last; ++j) {
        CutRow row;
        row.t = j * h;
        row.U = cross_section_mass(s, axis, row.t);
        row.rho = cut_area(s, axis, row.t);
        row.lhs = 2.0 * row.rho;
        row.rhs = rep.m * row.U / (2.0 * std::pow(d, k.alpha));
        row.inequality_fails = row.lhs < row.rhs;
        if (row.U < prevU) rep.U_monotone = false;
        prevU = row.U;
        if (row.U <= 0.0 || row.U >= rep.m) {
            rep.rows.push_back(row);
            continue;
        }
        std::vector<double> vgain;
        for (double R : rep.R) {
            const EnergyBreakdown e = split_energy(s, axis, row.t, R, k, opt);
            row.split_energy.push_back(e.E);
            const double gain = rep.energy - e.E;
            vgain.push_back(e.V);
            if (gain > 0.0) row.profitable = true;
            if (gain > rep.best_gain) {
                rep.best_gain = gain;
                rep.best_t = row.t;
            }
        }
        if (vgain.size() >= 2 && rep.R.size() >= 2 && std::abs(rep.R[1] - 2.0 * rep.R[0]) < 1e-9 * rep.R[1]) {
            // the cross term is V(split) - V(pieces); it decays like R^-alpha
            const SplitPieces p = split_pieces(s, axis, row.t);
            const double pieces = nonlocal_energy(p.lower, k, opt.nonlocal) + nonlocal_energy(p.upper, k, opt.nonlocal);
            row.far_field_ratio = (vgain[0] - pieces) / (vgain[1] - pieces);
        }
        if (row.profitable) rep.any_profitable = true;
        if (row.inequality_fails) ++rep.inequality_failures;
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Interpolation inequality over balls and random sets.

struct InterpolationScan {
    std::vector<double> ball_masses;
    std::vector<double> ball_ratios;
    double ball_spread = 0.0;   ///< max / min - 1 over the ball family
    double reference_ratio = 0.0; ///< ball of mass m_random at spacing h_random
    double constant = 0.0;      ///< recorded constant: max ball ratio x slack
    double slack = 1.0;
    std::vector<double> random_ratios;
    double random_max = 0.0;
    std::size_t counterexamples = 0; ///< random ratios above the constant
};

/// Balls of the given masses at a fixed radius-to-spacing ratio, then random
/// unions and blobs of mass m_random at spacing h_random. Coarse lattices
/// bias the perimeter estimate low, so the constant also covers a ball on the
/// random sets' lattice.
inline InterpolationScan interpolation_scan(const Kernel& k, const std::vector<double>& ball_masses,
                                           double cells_per_radius, std::size_t random_sets, double m_random,
                                           double h_random, std::uint64_t seed, double slack = 1.0,
                                           const EnergyOptions& opt = {}) {
    InterpolationScan out;
    out.slack = slack;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double m : ball_masses) {
        const double h = ball_radius(k.n, m) / cells_per_radius;
        const double r = interpolation_ratio(make_ball(k.n, m, h), k, opt);
        out.ball_masses.push_back(m);
        out.ball_ratios.push_back(r);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    out.ball_spread = hi / lo - 1.0;
    out.reference_ratio = interpolation_ratio(make_ball(k.n, m_random, h_random), k, opt);
    out.constant = std::max(hi, out.reference_ratio) * slack;
    Rng rng(seed);
    for (std::size_t j = 0; j < random_sets; ++j) {
        const std::uint64_t sd = rng.next();
        const GridSet s = j % 2 == 0 ? random_union(k.n, m_random, h_random, sd) : random_blob(k.n, m_random, h_random, sd);
        const double r = interpolation_ratio(s, k, opt);
        out.random_ratios.push_back(r);
        out.random_max = std::max(out.random_max, r);
        if (r > out.constant) ++out.counterexamples;
    }
    return out;
}

} // namespace ldlab
