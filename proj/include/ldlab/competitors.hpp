#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ldlab/energy.hpp"
#include "ldlab/error.hpp"
#include "ldlab/geometry.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/riesz.hpp"
#include "ldlab/shapes.hpp"

namespace ldlab {

// ---------------------------------------------------------------------------
// Ball chains: N = ceil(m) equal balls on the first axis, centers R apart.

inline int chain_count(double m) {
    require(m > 0.0, ErrorCode::InvalidArgument, "mass must be positive");
    return std::max(1, static_cast<int>(std::ceil(m - 1e-12)));
}

struct ChainLayout {
    int balls = 1;
    std::vector<std::size_t> cells; ///< per ball; total is round(m / h^n)
    double radius = 0.0;            ///< continuum radius of one ball
    int spacing_cells = 0;          ///< center distance in cells
};

inline ChainLayout chain_layout(int n, double m, double h, double spacing_factor = 10.0, int balls = 0) {
    ChainLayout c;
    c.balls = balls > 0 ? balls : chain_count(m);
    const std::size_t total = cells_for_mass(m, h, n);
    require(total >= static_cast<std::size_t>(c.balls), ErrorCode::InvalidArgument, "fewer cells than balls");
    for (int j = 0; j < c.balls; ++j)
        c.cells.push_back(total / c.balls + (static_cast<std::size_t>(j) < total % c.balls ? 1 : 0));
    c.radius = ball_radius(n, m / c.balls);
    require(spacing_factor * 2.0 > 1.0, ErrorCode::InvalidArgument, "chain spacing must exceed the ball diameter");
    c.spacing_cells = static_cast<int>(std::lround(spacing_factor * 2.0 * c.radius / h));
    return c;
}

/// The chain as one GridSet (box grows linearly with N; use chain_energy for large chains).
inline GridSet make_ball_chain(int n, double alpha, double m, double h, double spacing_factor = 10.0, int balls = 0) {
    Kernel{n, alpha}.validate(true);
    const ChainLayout c = chain_layout(n, m, h, spacing_factor, balls);
    const int half = static_cast<int>(std::ceil(c.radius / h)) + 3;
    Index shape{2 * half + 1 + (c.balls - 1) * c.spacing_cells, 2 * half + 1, 2 * half + 1};
    GridSet lattice = GridSet::centered(n, shape, h);
    const double x0 = -0.5 * h * (c.balls - 1) * c.spacing_cells;
    GridSet out = lattice.empty_like();
    for (int j = 0; j < c.balls; ++j) {
        const GridSet ball = ball_by_count(lattice, Point{x0 + h * j * c.spacing_cells, 0.0, 0.0}, c.cells[j]);
        for (std::size_t f = 0; f < ball.size(); ++f)
            if (ball.occupied(f)) out.set(f, true);
    }
    return out;
}

/// Energy of the chain without materializing it: every ball is rasterized
/// once on a small lattice and pair interactions use shifted-kernel cross
/// energies, V = sum_j V(B_j) + sum_{i != j} cross(B_i, B_j).
inline EnergyBreakdown chain_energy(const Kernel& k, double m, double h, double spacing_factor = 10.0, int balls = 0,
                                    const EnergyOptions& opt = {}) {
    k.validate(true);
    const ChainLayout c = chain_layout(k.n, m, h, spacing_factor, balls);
    const GridSet lattice = lattice_for_radius(k.n, c.radius, h);
    std::map<std::size_t, GridSet> shapes;
    std::map<std::size_t, EnergyBreakdown> singles;
    for (auto cells : c.cells)
        if (!shapes.count(cells)) {
            shapes.emplace(cells, ball_by_count(lattice, Point{0.0, 0.0, 0.0}, cells));
            singles.emplace(cells, total_energy(shapes.at(cells), k, opt));
        }
    std::map<std::tuple<std::size_t, std::size_t, int>, double> cross_cache;
    auto cross = [&](std::size_t a, std::size_t b, int d) {
        const auto key = std::make_tuple(a, b, d);
        auto it = cross_cache.find(key);
        if (it != cross_cache.end()) return it->second;
        const double v = cross_energy(shapes.at(a), shapes.at(b), k, Index{d * c.spacing_cells, 0, 0}, opt.nonlocal);
        cross_cache.emplace(key, v);
        return v;
    };
    EnergyBreakdown e;
    e.kernel = k;
    CompensatedSum P, V, M;
    for (int i = 0; i < c.balls; ++i) {
        const auto& s = singles.at(c.cells[i]);
        P.add(s.P);
        V.add(s.V);
        M.add(s.m);
        for (int j = i + 1; j < c.balls; ++j) V.add(2.0 * cross(c.cells[i], c.cells[j], j - i));
    }
    e.P = P.value();
    e.V = V.value();
    e.E = e.P + e.V;
    e.m = M.value();
    return e;
}

/// Oracle chain energy: N e(m/N) plus point-mass interactions between balls,
/// (m/N)^2 / (|i-j| R)^alpha. The point-mass form is exact for Newtonian
/// kernels (alpha = n - 2) and a far-field approximation otherwise; pass
/// R = infinity for separated balls.
inline double chain_energy_oracle(const BallOracle& oracle, double m, int balls, double R) {
    const double mj = m / balls;
    double e = balls * oracle.energy(mj);
    if (std::isfinite(R))
        for (int d = 1; d < balls; ++d) e += 2.0 * (balls - d) * mj * mj / std::pow(d * R, oracle.kernel().alpha);
    return e;
}

// ---------------------------------------------------------------------------

/// Resampling of l * s about the center of its bounding box, on the same
/// spacing. Every target cell pulls back to a point of the original lattice;
/// cells are ranked by the multilinear interpolation of the indicator there
/// (which is the indicator itself at l = 1), then by the nearest-cell value,
/// and the top `target` cells are kept, default round(l^n count). Remaining
/// ties fall back to a seeded shuffle.
inline GridSet rescale_set(const GridSet& s, double l, std::uint64_t seed = 0,
                           std::optional<std::size_t> target = std::nullopt) {
    require(l > 0.0 && std::isfinite(l), ErrorCode::InvalidArgument, "scale must be positive");
    require(!s.empty(), ErrorCode::EmptySet, "rescaling an empty set");
    const BoundingBox box = bounding_box(s);
    const double h = s.spacing();
    const int n = s.dim();
    Point c{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) c[a] = s.origin()[a] + 0.5 * h * (box.lo[a] + box.hi[a]);
    Index pad{0, 0, 0};
    if (l > 1.0)
        for (int a = 0; a < n; ++a) pad[a] = static_cast<int>(std::ceil((l - 1.0) * s.shape()[a] / 2.0)) + 1;
    GridSet out = s.padded(pad, pad).empty_like();
    const std::size_t want =
        target ? *target : static_cast<std::size_t>(std::llround(std::pow(l, n) * static_cast<double>(s.count())));

    struct Candidate {
        int nearest;
        double weight;
        std::uint64_t tie;
        std::size_t flat;
    };
    std::vector<Candidate> cand;
    Rng rng(seed);
    const Index& sh = out.shape();
    for (int i = 1; i < sh[0] - 1; ++i)
        for (int j = 1; j < sh[1] - 1; ++j)
            for (int k = (n == 3 ? 1 : 0); k < (n == 3 ? sh[2] - 1 : 1); ++k) {
                const Index y{i, j, k};
                const Point py = out.center(y);
                std::array<double, 3> x{0.0, 0.0, 0.0};
                Index base{0, 0, 0}, near{0, 0, 0};
                for (int a = 0; a < n; ++a) {
                    x[a] = (c[a] + (py[a] - c[a]) / l - s.origin()[a]) / h;
                    base[a] = static_cast<int>(std::floor(x[a]));
                    near[a] = static_cast<int>(std::lround(x[a]));
                }
                double w = 0.0;
                for (int corner = 0; corner < (1 << n); ++corner) {
                    Index q = base;
                    double f = 1.0;
                    for (int a = 0; a < n; ++a) {
                        const int bit = (corner >> a) & 1;
                        q[a] += bit;
                        const double t = x[a] - base[a];
                        f *= bit ? t : 1.0 - t;
                    }
                    if (f > 0.0 && s.occupied(q)) w += f;
                }
                const int nv = s.occupied(near) ? 1 : 0;
                if (nv == 0 && w == 0.0) continue;
                cand.push_back({nv, w, rng.next(), out.index(y)});
            }
    require(cand.size() >= want, ErrorCode::BoxTooSmall, "rescaled set does not reach the target volume");
    auto better = [](const Candidate& a, const Candidate& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.nearest != b.nearest) return a.nearest > b.nearest;
        return a.tie < b.tie;
    };
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(want), cand.end(), better);
    for (std::size_t q = 0; q < want; ++q) out.set(cand[q].flat, true);
    return out;
}

// ---------------------------------------------------------------------------
// Hyperplane split: the cut sits on the lattice plane nearest to t (measured
// from the bounding-box minimum); the upper piece moves by round(R / h) cells.

struct SplitPieces {
    GridSet lower;
    GridSet upper;
    bool trivial = true; ///< t outside the set: nothing to cut
};

inline SplitPieces split_pieces(const GridSet& s, int axis, double t) {
    detail::check_axis(s, axis);
    SplitPieces p{s, s.empty_like(), true};
    const BoundingBox box = bounding_box(s);
    if (box.empty()) return p;
    const int k = box.lo[axis] + cut_slice(s, t);
    if (k <= box.lo[axis] || k > box.hi[axis]) return p;
    p.trivial = false;
    p.lower = s.empty_like();
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        (s.coords(f)[axis] < k ? p.lower : p.upper).set(f, true);
    }
    require(!p.lower.empty() && !p.upper.empty(), ErrorCode::EmptyPiece, "cut leaves an empty piece");
    return p;
}

inline GridSet split_translate(const GridSet& s, int axis, double t, double R) {
    require(R >= 0.0, ErrorCode::InvalidArgument, "separation must be non-negative");
    const SplitPieces p = split_pieces(s, axis, t);
    if (p.trivial) return s;
    const int d = static_cast<int>(std::lround(R / s.spacing()));
    GridSet out = p.lower;
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!p.upper.occupied(f)) continue;
        Index c = s.coords(f);
        c[axis] += d;
        require(out.in_box(c) && !out.on_margin(c), ErrorCode::BoxTooSmall, "translated piece leaves the box");
        out.set(c, true);
    }
    return out;
}

/// E(split_translate(s, axis, t, R)) evaluated piecewise, so R is not limited by the box.
inline EnergyBreakdown split_energy(const GridSet& s, int axis, double t, double R, const Kernel& k,
                                    const EnergyOptions& opt = {}) {
    const SplitPieces p = split_pieces(s, axis, t);
    if (p.trivial) return total_energy(s, k, opt);
    Index shift{0, 0, 0};
    shift[axis] = static_cast<int>(std::lround(R / s.spacing()));
    const EnergyBreakdown a = total_energy(p.lower, k, opt), b = total_energy(p.upper, k, opt);
    EnergyBreakdown e;
    e.kernel = k;
    e.m = a.m + b.m;
    e.P = a.P + b.P;
    e.V = a.V + b.V + 2.0 * cross_energy(p.lower, p.upper, k, shift, opt.nonlocal);
    e.E = e.P + e.V;
    return e;
}

// ---------------------------------------------------------------------------
// Non-optimality criterion for F = F1 ∪ F2: when the split costs little
// perimeter (Sigma <= E(F2) / 2) and F2 is small (|F2| <= eps min{1, |F1|}),
// either l F1 with l = (1 + |F2|/|F1|)^(1/n) or a ball chain of mass |F|
// should beat F.

struct NonOptimalityConfig {
    double eps = 0.05;
    double spacing_factor = 10.0;
    std::uint64_t seed = 0;
    EnergyOptions energy{};
};

struct NonOptimalityRecord {
    double sigma = 0.0;
    double energy_f2 = 0.0;
    double mass_f1 = 0.0;
    double mass_f2 = 0.0;
    double energy_union = 0.0;
    bool sigma_gate = false; ///< Sigma <= E(F2) / 2
    bool mass_gate = false;  ///< |F2| <= eps min{1, |F1|}
    bool triggered = false;
    double energy_rescaled = std::numeric_limits<double>::quiet_NaN();
    double energy_chain = std::numeric_limits<double>::quiet_NaN();
    std::string best; ///< "rescaled", "chain", or empty when not triggered
    double best_energy = std::numeric_limits<double>::quiet_NaN();
    bool improved = false; ///< best_energy < energy_union
    std::optional<GridSet> rescaled;
};

inline NonOptimalityRecord non_optimality_check(const GridSet& f1, const GridSet& f2, const Kernel& k,
                                                const NonOptimalityConfig& cfg = {}) {
    detail::check_kernel_for(f1, k);
    require(f1.same_lattice(f2), ErrorCode::DimensionMismatch, "pieces must share a lattice");
    require(!f1.empty() && !f2.empty(), ErrorCode::EmptyPiece, "both pieces must be nonempty");
    GridSet u = f1;
    for (std::size_t f = 0; f < f2.size(); ++f) {
        if (!f2.occupied(f)) continue;
        require(!f1.occupied(f), ErrorCode::NotDisjoint, "pieces overlap");
        u.set(f, true);
    }
    NonOptimalityRecord r;
    const auto& opt = cfg.energy;
    const EnergyBreakdown eu = total_energy(u, k, opt), e2 = total_energy(f2, k, opt);
    r.mass_f1 = volume(f1);
    r.mass_f2 = volume(f2);
    r.energy_union = eu.E;
    r.energy_f2 = e2.E;
    r.sigma = perimeter(f1, opt.perimeter) + e2.P - eu.P;
    r.sigma_gate = r.sigma <= 0.5 * r.energy_f2;
    r.mass_gate = r.mass_f2 <= cfg.eps * std::min(1.0, r.mass_f1);
    r.triggered = r.sigma_gate && r.mass_gate;
    if (!r.triggered) return r;

    const double gamma = r.mass_f2 / r.mass_f1;
    const double l = std::pow(1.0 + gamma, 1.0 / k.n);
    GridSet scaled = rescale_set(f1, l, cfg.seed, u.count());
    r.energy_rescaled = total_energy(scaled, k, opt).E;
    r.rescaled = std::move(scaled);
    r.energy_chain = chain_energy(k, eu.m, f1.spacing(), cfg.spacing_factor, 0, opt).E;
    if (r.energy_rescaled <= r.energy_chain) {
        r.best = "rescaled";
        r.best_energy = r.energy_rescaled;
    } else {
        r.best = "chain";
        r.best_energy = r.energy_chain;
    }
    r.improved = r.best_energy < r.energy_union;
    return r;
}

// ---------------------------------------------------------------------------
// Truncation to bounded support.

enum class TruncationBranch {
    unchanged,      ///< already inside the ball of the configured radius
    ball,           ///< E(s) exceeds the equal-mass ball: the ball is returned
    truncated,      ///< a scan radius triggered the non-optimality criterion
    no_improvement, ///< nothing better found; input returned
};

inline const char* to_string(TruncationBranch b) {
    switch (b) {
    case TruncationBranch::unchanged: return "unchanged";
    case TruncationBranch::ball: return "ball";
    case TruncationBranch::truncated: return "truncated";
    case TruncationBranch::no_improvement: return "no_improvement";
    }
    return "unknown";
}

struct TruncationConfig {
    double radius = 1.0; ///< support radius about the barycenter
    NonOptimalityConfig criterion{};
};

struct TruncationResult {
    GridSet set;
    EnergyBreakdown energy;
    TruncationBranch branch = TruncationBranch::unchanged;
    double scan_radius = 0.0; ///< rho used by the truncated branch
};

inline Point barycenter(const GridSet& s) {
    require(!s.empty(), ErrorCode::EmptySet, "barycenter of an empty set");
    Point c{0.0, 0.0, 0.0};
    std::size_t n = 0;
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        const Point p = s.center(s.coords(f));
        for (int a = 0; a < 3; ++a) c[a] += p[a];
        ++n;
    }
    for (auto& v : c) v /= static_cast<double>(n);
    return c;
}

inline double max_distance_from(const GridSet& s, const Point& c) {
    double r2 = 0.0;
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        const Point p = s.center(s.coords(f));
        double d = 0.0;
        for (int a = 0; a < s.dim(); ++a) d += (p[a] - c[a]) * (p[a] - c[a]);
        r2 = std::max(r2, d);
    }
    return std::sqrt(r2);
}

inline TruncationResult truncated_competitor(const GridSet& s, const Kernel& k, const TruncationConfig& cfg = {}) {
    require(!s.empty(), ErrorCode::EmptySet, "truncating an empty set");
    detail::check_kernel_for(s, k);
    const auto& opt = cfg.criterion.energy;
    TruncationResult res{s, total_energy(s, k, opt), TruncationBranch::unchanged, 0.0};
    const Point c = barycenter(s);
    if (max_distance_from(s, c) <= cfg.radius) return res;

    const GridSet ball = make_ball(s.dim(), volume(s), s.spacing());
    const EnergyBreakdown eb = total_energy(ball, k, opt);
    if (res.energy.E > eb.E) return {ball, eb, TruncationBranch::ball, 0.0};

    // scan lattice radii inside the support radius
    const double h = s.spacing();
    std::optional<TruncationResult> best;
    for (double rho = 2.0 * h; rho <= cfg.radius; rho += h) {
        GridSet inner = s.empty_like(), outer = s.empty_like();
        for (std::size_t f = 0; f < s.size(); ++f) {
            if (!s.occupied(f)) continue;
            const Point p = s.center(s.coords(f));
            double d = 0.0;
            for (int a = 0; a < s.dim(); ++a) d += (p[a] - c[a]) * (p[a] - c[a]);
            (std::sqrt(d) <= rho ? inner : outer).set(f, true);
        }
        if (inner.empty() || outer.empty()) continue;
        // cheap gate before any energy evaluation
        if (volume(outer) > cfg.criterion.eps * std::min(1.0, volume(inner))) continue;
        const NonOptimalityRecord r = non_optimality_check(inner, outer, k, cfg.criterion);
        if (!r.triggered || !r.improved || r.best != "rescaled") continue;
        if (!best || r.best_energy < best->energy.E) {
            const GridSet& g = *r.rescaled;
            best = TruncationResult{g, total_energy(g, k, opt), TruncationBranch::truncated, rho};
        }
    }
    if (best) return *best;
    res.branch = TruncationBranch::no_improvement;
    return res;
}

} // namespace ldlab
