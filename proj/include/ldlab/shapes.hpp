#pragma once

// Rasterized reference shapes. Volume targets are met by cell count: a shape
// of mass m occupies round(m / h^n) cells.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "ldlab/error.hpp"
#include "ldlab/geometry.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/parallel.hpp"

namespace ldlab {

inline std::size_t cells_for_mass(double m, double h, int n) {
    require(m >= 0.0 && std::isfinite(m), ErrorCode::InvalidArgument, "mass must be non-negative");
    return static_cast<std::size_t>(std::llround(m / std::pow(h, n)));
}

inline double ball_radius(int n, double m) { return std::pow(m / unit_ball_volume(n), 1.0 / n); }

/// Cube-shaped box (odd cell count per axis) centered on `center`, just large
/// enough for a ball of radius r plus `pad` empty cells per side.
inline GridSet lattice_for_radius(int n, double r, double h, int pad = 3, Point center = {0.0, 0.0, 0.0}) {
    const int half = static_cast<int>(std::ceil(r / h)) + pad;
    const int side = 2 * half + 1;
    return GridSet::centered(n, Index{side, side, side}, h, center);
}

/// The `count` cells whose centers are nearest to `center` (ties by flat
/// index), i.e. a ball whose radius is tuned so the volume is exact.
inline GridSet ball_by_count(const GridSet& lattice, const Point& center, std::size_t count) {
    GridSet out = lattice.empty_like();
    if (count == 0) return out;
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(out.size());
    for (std::size_t f = 0; f < out.size(); ++f) {
        const Point p = out.center(out.coords(f));
        double r2 = 0.0;
        for (int a = 0; a < out.dim(); ++a) r2 += (p[a] - center[a]) * (p[a] - center[a]);
        dist.emplace_back(r2, f);
    }
    require(count <= dist.size(), ErrorCode::BoxTooSmall, "ball does not fit in the box");
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(count), dist.end());
    for (std::size_t k = 0; k < count; ++k) out.set(dist[k].second, true); // throws BoxTooSmall on the margin
    return out;
}

/// Rasterized ball of mass m centered on a cell center at the origin.
inline GridSet make_ball(int n, double m, double h) {
    const std::size_t count = cells_for_mass(m, h, n);
    require(count >= 1, ErrorCode::InvalidArgument, "mass below one cell");
    const GridSet lattice = lattice_for_radius(n, ball_radius(n, m), h);
    return ball_by_count(lattice, Point{0.0, 0.0, 0.0}, count);
}

/// Ball of mass m placed on an existing lattice.
inline GridSet make_ball_on(const GridSet& lattice, double m, const Point& center) {
    return ball_by_count(lattice, center, cells_for_mass(m, lattice.spacing(), lattice.dim()));
}

/// Axis-aligned box with the given side lengths, cells with centers in
/// [-side/2, side/2) per axis; exact when side / h is an integer.
inline GridSet make_box(int n, std::array<double, 3> sides, double h) {
    Index shape{1, 1, 1};
    Point origin{0.0, 0.0, 0.0};
    std::array<int, 3> cells{1, 1, 1};
    for (int a = 0; a < n; ++a) {
        cells[a] = static_cast<int>(std::llround(sides[a] / h));
        require(cells[a] >= 1, ErrorCode::InvalidArgument, "box side below one cell");
        shape[a] = cells[a] + 4;
        origin[a] = -0.5 * cells[a] * h + 0.5 * h - 2.0 * h;
    }
    GridSet out(n, shape, h, origin);
    for (int i = 0; i < cells[0]; ++i)
        for (int j = 0; j < cells[1]; ++j)
            for (int k = 0; k < (n == 3 ? cells[2] : 1); ++k)
                out.set(Index{i + 2, j + 2, n == 3 ? k + 2 : 0}, true);
    return out;
}

/// Solid ellipsoid (ellipse in 2-D) with semi-axes `axes`, centered at the origin.
inline GridSet make_ellipsoid(int n, std::array<double, 3> axes, double h) {
    double longest = 0.0;
    for (int a = 0; a < n; ++a) longest = std::max(longest, axes[a]);
    const GridSet lattice = lattice_for_radius(n, longest, h);
    return rasterize(lattice, [&](const Point& p) {
        double q = 0.0;
        for (int a = 0; a < n; ++a) q += (p[a] / axes[a]) * (p[a] / axes[a]);
        return q <= 1.0;
    });
}

namespace detail {

/// Empty cells with an occupied face neighbour, ascending.
inline std::vector<std::size_t> frontier_cells(const GridSet& s) {
    std::vector<std::size_t> out;
    const auto nbrs = face_offsets(s.dim());
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (s.occupied(f)) continue;
        const Index c = s.coords(f);
        if (s.on_margin(c)) continue;
        for (const auto& d : nbrs)
            if (s.occupied(Index{c[0] + d[0], c[1] + d[1], c[2] + d[2]})) {
                out.push_back(f);
                break;
            }
    }
    return out;
}

} // namespace detail

/// Adds or removes random boundary cells until exactly `target` cells are
/// occupied. Deterministic for a given seed.
inline void adjust_to_count(GridSet& s, std::size_t target, std::uint64_t seed) {
    Rng rng(seed);
    while (s.count() < target) {
        const auto front = detail::frontier_cells(s);
        require(!front.empty(), ErrorCode::BoxTooSmall, "no room to grow the set");
        const std::size_t need = target - s.count();
        // one random pass over the current frontier, at most `need` cells
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t k = 0; k < std::min(need, order.size()); ++k) {
            std::swap(order[k], order[k + rng.below(order.size() - k)]);
            s.set(front[order[k]], true);
        }
    }
    while (s.count() > target) {
        const auto edge = boundary_cells(s);
        const std::size_t excess = s.count() - target;
        std::vector<std::size_t> order(edge.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t k = 0; k < std::min(excess, order.size()); ++k) {
            std::swap(order[k], order[k + rng.below(order.size() - k)]);
            s.set(edge[order[k]], false);
        }
    }
}

/// Random compact blob of mass m: Eden growth from the center cell, inside a
/// box sized for a ball of twice the equal-mass radius.
inline GridSet random_blob(int n, double m, double h, std::uint64_t seed) {
    const std::size_t count = cells_for_mass(m, h, n);
    require(count >= 1, ErrorCode::InvalidArgument, "mass below one cell");
    GridSet s = lattice_for_radius(n, 2.0 * ball_radius(n, m), h);
    Index mid{s.shape()[0] / 2, s.shape()[1] / 2, n == 3 ? s.shape()[2] / 2 : 0};
    s.set(mid, true);
    Rng rng(seed);
    std::vector<std::size_t> front;
    std::vector<std::uint8_t> listed(s.size(), 0);
    const auto nbrs = face_offsets(n);
    auto push_neighbours = [&](const Index& c) {
        for (const auto& d : nbrs) {
            const Index q{c[0] + d[0], c[1] + d[1], c[2] + d[2]};
            if (!s.in_box(q) || s.on_margin(q)) continue;
            const std::size_t f = s.index(q);
            if (s.occupied(f) || listed[f]) continue;
            listed[f] = 1;
            front.push_back(f);
        }
    };
    push_neighbours(mid);
    for (std::size_t have = 1; have < count; ++have) {
        require(!front.empty(), ErrorCode::BoxTooSmall, "blob outgrew its box");
        const std::size_t k = rng.below(front.size());
        const std::size_t f = front[k];
        front[k] = front.back();
        front.pop_back();
        s.set(f, true);
        push_neighbours(s.coords(f));
    }
    return s;
}

/// Random union of 1 to 4 ellipsoids with random axes and offsets, adjusted
/// to mass m. Shapes range from near-balls to elongated or pinched sets.
inline GridSet random_union(int n, double m, double h, std::uint64_t seed) {
    const std::size_t count = cells_for_mass(m, h, n);
    require(count >= 1, ErrorCode::InvalidArgument, "mass below one cell");
    Rng rng(seed);
    const double r = ball_radius(n, m);
    const int pieces = 1 + static_cast<int>(rng.below(4));
    struct Piece {
        Point c;
        std::array<double, 3> ax;
    };
    std::vector<Piece> ps;
    for (int k = 0; k < pieces; ++k) {
        Piece p{};
        for (int a = 0; a < n; ++a) {
            p.c[a] = k == 0 ? 0.0 : rng.uniform(-1.2, 1.2) * r;
            p.ax[a] = r * rng.uniform(0.35, 1.1);
        }
        ps.push_back(p);
    }
    GridSet s = lattice_for_radius(n, 3.0 * r, h);
    s = rasterize(s, [&](const Point& x) {
        for (const auto& p : ps) {
            double q = 0.0;
            for (int a = 0; a < n; ++a) q += ((x[a] - p.c[a]) / p.ax[a]) * ((x[a] - p.c[a]) / p.ax[a]);
            if (q <= 1.0) return true;
        }
        return false;
    });
    if (s.empty()) s.set(Index{s.shape()[0] / 2, s.shape()[1] / 2, n == 3 ? s.shape()[2] / 2 : 0}, true);
    adjust_to_count(s, count, rng.next());
    return s;
}

/// Initial set for annealing: "blob", "union" or "ball" of mass m, padded so
/// the box half-width is at least box_factor equal-mass radii plus 3 cells.
inline GridSet initial_set(const std::string& kind, int n, double m, double h, std::uint64_t seed,
                           double box_factor = 2.0) {
    GridSet s = kind == "blob"    ? random_blob(n, m, h, seed)
                : kind == "union" ? random_union(n, m, h, seed)
                : kind == "ball"  ? make_ball(n, m, h)
                                  : throw Error(ErrorCode::InvalidArgument, "unknown initial set '" + kind + "'");
    const int want = static_cast<int>(std::ceil(box_factor * ball_radius(n, m) / h)) + 3;
    const int have = s.shape()[0] / 2;
    if (want > have) {
        const int p = want - have;
        s = s.padded(Index{p, p, n == 3 ? p : 0}, Index{p, p, n == 3 ? p : 0});
    }
    return s;
}

} // namespace ldlab
