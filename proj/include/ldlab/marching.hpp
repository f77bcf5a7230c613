#pragma once

// Marching squares / marching cubes, reduced to what an area estimate needs.
//
// Instead of a hand-typed triangle table, the per-configuration polygons are
// generated once: on every face the crossing edges are paired (an ambiguous
// face always separates its inside corners, a rule that only depends on the
// face itself, so neighbouring cubes agree and the surface is closed), and
// the face segments are chained into closed edge cycles.

#include <array>
#include <cmath>
#include <vector>

namespace ldlab::marching {

struct CubeTables {
    std::array<std::array<int, 2>, 12> edge_corners{};
    std::array<std::vector<std::vector<int>>, 256> polygons;
};

inline std::array<double, 3> corner_position(int c) {
    return {static_cast<double>(c & 1), static_cast<double>((c >> 1) & 1), static_cast<double>((c >> 2) & 1)};
}

inline CubeTables build_cube_tables() {
    CubeTables t;
    int e = 0;
    std::array<std::array<int, 8>, 8> edge_of{};
    for (auto& row : edge_of) row.fill(-1);
    for (int bit = 0; bit < 3; ++bit)
        for (int c = 0; c < 8; ++c)
            if (!(c & (1 << bit))) {
                t.edge_corners[e] = {c, c | (1 << bit)};
                edge_of[c][c | (1 << bit)] = edge_of[c | (1 << bit)][c] = e;
                ++e;
            }

    // Faces as corner cycles.
    std::vector<std::array<int, 4>> faces;
    for (int axis = 0; axis < 3; ++axis) {
        const int b = (axis + 1) % 3, d = (axis + 2) % 3;
        for (int v = 0; v < 2; ++v) {
            std::array<int, 4> cyc{};
            const int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
            for (int k = 0; k < 4; ++k)
                cyc[k] = (v << axis) | (uv[k][0] << b) | (uv[k][1] << d);
            faces.push_back(cyc);
        }
    }

    for (int mask = 0; mask < 256; ++mask) {
        auto inside = [&](int c) { return (mask >> c) & 1; };
        std::array<std::vector<int>, 12> link;
        for (const auto& f : faces) {
            std::array<int, 4> fe{};
            for (int k = 0; k < 4; ++k) fe[k] = edge_of[f[k]][f[(k + 1) % 4]];
            std::vector<int> crossing;
            for (int k = 0; k < 4; ++k)
                if (inside(f[k]) != inside(f[(k + 1) % 4])) crossing.push_back(k);
            if (crossing.size() == 2) {
                const int a = fe[crossing[0]], b = fe[crossing[1]];
                link[a].push_back(b);
                link[b].push_back(a);
            } else if (crossing.size() == 4) {
                // Cut off each inside corner: its two incident face edges pair up.
                for (int k = 0; k < 4; ++k) {
                    if (!inside(f[k])) continue;
                    const int a = fe[(k + 3) % 4], b = fe[k];
                    link[a].push_back(b);
                    link[b].push_back(a);
                }
            }
        }
        std::array<bool, 12> used{};
        for (int start = 0; start < 12; ++start) {
            if (used[start] || link[start].empty()) continue;
            std::vector<int> poly{start};
            used[start] = true;
            int prev = -1, cur = start;
            while (true) {
                const int next = (link[cur][0] != prev) ? link[cur][0] : link[cur][1];
                if (next == start) break;
                poly.push_back(next);
                used[next] = true;
                prev = cur;
                cur = next;
            }
            t.polygons[mask].push_back(std::move(poly));
        }
    }
    return t;
}

inline const CubeTables& cube_tables() {
    static const CubeTables tables = build_cube_tables();
    return tables;
}

namespace detail {

inline std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const std::array<double, 3>& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

} // namespace detail

/// Isosurface area inside one unit cube with corner values `v` (corner c at
/// bits (x, y, z) = (c&1, c>>1&1, c>>2&1)); inside means v > iso.
inline double cube_area(const std::array<double, 8>& v, double iso) {
    int mask = 0;
    for (int c = 0; c < 8; ++c)
        if (v[c] > iso) mask |= 1 << c;
    if (mask == 0 || mask == 255) return 0.0;
    const CubeTables& t = cube_tables();
    double area = 0.0;
    for (const auto& poly : t.polygons[mask]) {
        std::vector<std::array<double, 3>> pts;
        pts.reserve(poly.size());
        std::array<double, 3> centroid{0.0, 0.0, 0.0};
        for (int e : poly) {
            const int c0 = t.edge_corners[e][0], c1 = t.edge_corners[e][1];
            const double s = (iso - v[c0]) / (v[c1] - v[c0]);
            const auto p0 = corner_position(c0), p1 = corner_position(c1);
            std::array<double, 3> p{};
            for (int a = 0; a < 3; ++a) {
                p[a] = p0[a] + s * (p1[a] - p0[a]);
                centroid[a] += p[a];
            }
            pts.push_back(p);
        }
        if (pts.size() == 3) {
            std::array<double, 3> d1{}, d2{};
            for (int a = 0; a < 3; ++a) {
                d1[a] = pts[1][a] - pts[0][a];
                d2[a] = pts[2][a] - pts[0][a];
            }
            area += 0.5 * detail::norm(detail::cross(d1, d2));
            continue;
        }
        for (auto& c : centroid) c /= static_cast<double>(pts.size());
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const auto& a = pts[k];
            const auto& b = pts[(k + 1) % pts.size()];
            std::array<double, 3> d1{}, d2{};
            for (int ax = 0; ax < 3; ++ax) {
                d1[ax] = a[ax] - centroid[ax];
                d2[ax] = b[ax] - centroid[ax];
            }
            area += 0.5 * detail::norm(detail::cross(d1, d2));
        }
    }
    return area;
}

/// Isoline length inside one unit square; corner c at (c&1, c>>1).
inline double square_length(const std::array<double, 4>& v, double iso) {
    static const int cycle[4] = {0, 1, 3, 2};
    auto in = [&](int c) { return v[c] > iso; };
    auto point = [&](int k) {
        const int c0 = cycle[k], c1 = cycle[(k + 1) % 4];
        const double s = (iso - v[c0]) / (v[c1] - v[c0]);
        const double x0 = c0 & 1, y0 = c0 >> 1, x1 = c1 & 1, y1 = c1 >> 1;
        return std::array<double, 2>{x0 + s * (x1 - x0), y0 + s * (y1 - y0)};
    };
    auto dist = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
        return std::hypot(a[0] - b[0], a[1] - b[1]);
    };
    std::vector<int> crossing;
    for (int k = 0; k < 4; ++k)
        if (in(cycle[k]) != in(cycle[(k + 1) % 4])) crossing.push_back(k);
    if (crossing.size() == 2) return dist(point(crossing[0]), point(crossing[1]));
    if (crossing.size() == 4) {
        double len = 0.0;
        for (int k = 0; k < 4; ++k)
            if (in(cycle[k])) len += dist(point((k + 3) % 4), point(k));
        return len;
    }
    return 0.0;
}

} // namespace ldlab::marching
