#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "ldlab/error.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/marching.hpp"
#include "ldlab/parallel.hpp"

namespace ldlab {

enum class PerimeterMethod {
    facet,        ///< h^(n-1) x occupied/empty face adjacencies; exact for unions of cells
    surface_mesh, ///< marching squares/cubes on the once box-filtered indicator
    crofton,      ///< weighted neighbour-pair counts over the 3^n stencil; local and nearly isotropic
};

inline double volume(const GridSet& s) { return static_cast<double>(s.count()) * s.cell_volume(); }

struct BoundingBox {
    Index lo{0, 0, 0};
    Index hi{-1, -1, -1}; ///< inclusive
    bool empty() const { return hi[0] < lo[0]; }
};

inline BoundingBox bounding_box(const GridSet& s) {
    BoundingBox box;
    box.lo = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
    box.hi = {-1, -1, -1};
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        const Index i = s.coords(f);
        for (int a = 0; a < 3; ++a) {
            box.lo[a] = std::min(box.lo[a], i[a]);
            box.hi[a] = std::max(box.hi[a], i[a]);
        }
    }
    if (box.hi[0] < 0) box = BoundingBox{};
    return box;
}

inline std::vector<Index> face_offsets(int dim) {
    std::vector<Index> out;
    for (int a = 0; a < dim; ++a) {
        Index plus{0, 0, 0}, minus{0, 0, 0};
        plus[a] = 1;
        minus[a] = -1;
        out.push_back(plus);
        out.push_back(minus);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Crofton stencil: one representative offset per primitive lattice direction
// with components in [-reach, reach], with one weight per symmetry class
// (sorted absolute components) fitted so that sum_k w_k |n . d_k| is as close
// to 1 as possible over the unit sphere (least squares on a Fibonacci point
// set). Reach 1 leaves ~7% anisotropy in 3-D, reach 2 ~3%, reach 3 ~1.4%.

struct CroftonStencil {
    std::vector<Index> offsets;
    std::vector<double> weights;
    int reach = 1;
    double max_anisotropy = 0.0; ///< max |sum_k w_k |n.d_k| - 1| over the fit points
};

inline constexpr int kCroftonReach = 3;

namespace detail {

inline CroftonStencil build_crofton(int dim, int reach) {
    CroftonStencil st;
    st.reach = reach;
    std::vector<std::array<int, 3>> class_keys;
    std::vector<int> cls;
    const int zr = dim == 3 ? reach : 0;
    for (int x = -reach; x <= reach; ++x)
        for (int y = -reach; y <= reach; ++y)
            for (int z = -zr; z <= zr; ++z) {
                const Index d{x, y, z};
                // keep the lexicographically positive representative of +/-d
                const int first = x != 0 ? x : (y != 0 ? y : z);
                if (first <= 0) continue;
                if (std::gcd(std::gcd(std::abs(x), std::abs(y)), std::abs(z)) != 1) continue;
                std::array<int, 3> key{std::abs(x), std::abs(y), std::abs(z)};
                std::sort(key.begin(), key.end());
                auto it = std::find(class_keys.begin(), class_keys.end(), key);
                if (it == class_keys.end()) {
                    class_keys.push_back(key);
                    it = class_keys.end() - 1;
                }
                st.offsets.push_back(d);
                cls.push_back(static_cast<int>(it - class_keys.begin()));
            }
    const int nclass = static_cast<int>(class_keys.size());
    std::vector<std::array<double, 3>> normals;
    if (dim == 3) {
        const int m = 4000;
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < m; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / m;
            const double r = std::sqrt(1.0 - z * z);
            normals.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
        }
    } else {
        const int m = 2000;
        for (int i = 0; i < m; ++i) {
            const double th = 2.0 * std::numbers::pi * (i + 0.5) / m;
            normals.push_back({std::cos(th), std::sin(th), 0.0});
        }
    }
    // normal equations for the class weights
    std::vector<std::vector<double>> ata(nclass, std::vector<double>(nclass, 0.0));
    std::vector<double> atb(nclass, 0.0);
    std::vector<std::vector<double>> rows;
    for (const auto& nrm : normals) {
        std::vector<double> row(nclass, 0.0);
        for (std::size_t k = 0; k < st.offsets.size(); ++k) {
            const auto& d = st.offsets[k];
            row[cls[k]] += std::abs(nrm[0] * d[0] + nrm[1] * d[1] + nrm[2] * d[2]);
        }
        for (int i = 0; i < nclass; ++i) {
            atb[i] += row[i];
            for (int j = 0; j < nclass; ++j) ata[i][j] += row[i] * row[j];
        }
        rows.push_back(row);
    }
    // Gaussian elimination (tiny, well conditioned)
    std::vector<double> w = atb;
    for (int c = 0; c < nclass; ++c) {
        for (int r = c + 1; r < nclass; ++r) {
            const double f = ata[r][c] / ata[c][c];
            for (int k = c; k < nclass; ++k) ata[r][k] -= f * ata[c][k];
            w[r] -= f * w[c];
        }
    }
    for (int c = nclass - 1; c >= 0; --c) {
        for (int k = c + 1; k < nclass; ++k) w[c] -= ata[c][k] * w[k];
        w[c] /= ata[c][c];
    }
    for (std::size_t k = 0; k < st.offsets.size(); ++k) st.weights.push_back(w[cls[k]]);
    for (const auto& row : rows) {
        double v = 0.0;
        for (int i = 0; i < nclass; ++i) v += w[i] * row[i];
        st.max_anisotropy = std::max(st.max_anisotropy, std::abs(v - 1.0));
    }
    return st;
}

} // namespace detail

inline const CroftonStencil& crofton_stencil(int dim) {
    static const CroftonStencil s2 = detail::build_crofton(2, kCroftonReach);
    static const CroftonStencil s3 = detail::build_crofton(3, kCroftonReach);
    return dim == 2 ? s2 : s3;
}

namespace detail {

/// h^(n-1) sum_k w_k #{pairs (x, x + d_k) with exactly one occupied end}.
/// Each such pair has one occupied member, so it suffices to visit occupied
/// cells and look both ways; cells outside the box count as empty.
inline double pair_count_perimeter(const GridSet& s, const std::vector<Index>& offsets, const std::vector<double>& weights) {
    std::vector<std::size_t> differ(offsets.size(), 0);
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        const Index c = s.coords(f);
        for (std::size_t k = 0; k < offsets.size(); ++k) {
            const Index& d = offsets[k];
            if (!s.occupied(Index{c[0] + d[0], c[1] + d[1], c[2] + d[2]})) ++differ[k];
            if (!s.occupied(Index{c[0] - d[0], c[1] - d[1], c[2] - d[2]})) ++differ[k];
        }
    }
    CompensatedSum total;
    for (std::size_t k = 0; k < offsets.size(); ++k) total.add(weights[k] * static_cast<double>(differ[k]));
    return total.value() * std::pow(s.spacing(), s.dim() - 1);
}

/// Occupied-neighbour counts over the 3^n box around each cell (out of box = empty).
inline std::vector<int> box_filter_counts(const GridSet& s) {
    const Index& sh = s.shape();
    const int zr = s.dim() == 3 ? 1 : 0;
    std::vector<int> out(s.size(), 0);
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        const Index c = s.coords(f);
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -zr; dz <= zr; ++dz) {
                    const Index n{c[0] + dx, c[1] + dy, c[2] + dz};
                    if (n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] >= sh[0] || n[1] >= sh[1] || n[2] >= sh[2]) continue;
                    ++out[s.index(n)];
                }
    }
    return out;
}

inline double surface_mesh_perimeter(const GridSet& s) {
    const std::vector<int> field = box_filter_counts(s);
    const Index& sh = s.shape();
    const double h = s.spacing();
    CompensatedSum total;
    if (s.dim() == 2) {
        const double iso = 4.5; // half of 9
        for (int i = 0; i + 1 < sh[0]; ++i)
            for (int j = 0; j + 1 < sh[1]; ++j) {
                std::array<double, 4> v{};
                for (int c = 0; c < 4; ++c) v[c] = field[s.index({i + (c & 1), j + (c >> 1), 0})];
                total.add(marching::square_length(v, iso));
            }
        return total.value() * h;
    }
    const double iso = 13.5; // half of 27
    for (int i = 0; i + 1 < sh[0]; ++i)
        for (int j = 0; j + 1 < sh[1]; ++j)
            for (int k = 0; k + 1 < sh[2]; ++k) {
                std::array<double, 8> v{};
                bool any_in = false, any_out = false;
                for (int c = 0; c < 8; ++c) {
                    v[c] = field[s.index({i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)})];
                    (v[c] > iso ? any_in : any_out) = true;
                }
                if (any_in && any_out) total.add(marching::cube_area(v, iso));
            }
    return total.value() * h * h;
}

} // namespace detail

/// Perimeter (length in 2-D, area in 3-D) of the set.
inline double perimeter(const GridSet& s, PerimeterMethod method = PerimeterMethod::surface_mesh) {
    switch (method) {
    case PerimeterMethod::facet: {
        std::vector<Index> axes;
        for (int a = 0; a < s.dim(); ++a) {
            Index d{0, 0, 0};
            d[a] = 1;
            axes.push_back(d);
        }
        return detail::pair_count_perimeter(s, axes, std::vector<double>(axes.size(), 1.0));
    }
    case PerimeterMethod::crofton: {
        const auto& st = crofton_stencil(s.dim());
        return detail::pair_count_perimeter(s, st.offsets, st.weights);
    }
    case PerimeterMethod::surface_mesh:
    default:
        return detail::surface_mesh_perimeter(s);
    }
}

/// Occupied cells with at least one empty face neighbour.
inline std::vector<std::size_t> boundary_cells(const GridSet& s) {
    std::vector<std::size_t> out;
    const auto nbrs = face_offsets(s.dim());
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        const Index c = s.coords(f);
        for (const auto& d : nbrs) {
            if (!s.occupied(Index{c[0] + d[0], c[1] + d[1], c[2] + d[2]})) {
                out.push_back(f);
                break;
            }
        }
    }
    return out;
}

/// Largest distance between occupied cell centers. Extreme points of the
/// center cloud always have an empty face neighbour, so the all-pairs scan
/// runs over boundary cells only.
inline double essential_diameter(const GridSet& s) {
    const auto cells = boundary_cells(s);
    require(!cells.empty(), ErrorCode::EmptySet, "diameter of an empty set");
    std::vector<Index> pts;
    pts.reserve(cells.size());
    for (auto f : cells) pts.push_back(s.coords(f));
    const std::size_t n = pts.size();
    constexpr std::size_t kBlock = 256;
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    std::vector<long long> best(blocks, 0);
    parallel_for(blocks, [&](std::size_t b) {
        long long m = 0;
        for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const long long dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1], dz = pts[i][2] - pts[j][2];
                m = std::max(m, dx * dx + dy * dy + dz * dz);
            }
        best[b] = m;
    });
    const long long m = *std::max_element(best.begin(), best.end());
    return s.spacing() * std::sqrt(static_cast<double>(m));
}

/// Face-connected components, ordered by their smallest flat index.
inline std::vector<GridSet> components(const GridSet& s) {
    std::vector<int> label(s.size(), -1);
    std::vector<GridSet> out;
    const auto nbrs = face_offsets(s.dim());
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f) || label[f] >= 0) continue;
        const int id = static_cast<int>(out.size());
        GridSet comp = s.empty_like();
        std::deque<std::size_t> queue{f};
        label[f] = id;
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            const Index c = s.coords(cur);
            comp.set(c, true);
            for (const auto& d : nbrs) {
                const Index n{c[0] + d[0], c[1] + d[1], c[2] + d[2]};
                if (!s.occupied(n)) continue;
                const std::size_t nf = s.index(n);
                if (label[nf] >= 0) continue;
                label[nf] = id;
                queue.push_back(nf);
            }
        }
        out.push_back(std::move(comp));
    }
    return out;
}

/// Number of components holding at least `min_fraction` of the total volume.
inline std::size_t major_component_count(const GridSet& s, double min_fraction) {
    const double total = static_cast<double>(s.count());
    std::size_t n = 0;
    for (const auto& c : components(s))
        if (static_cast<double>(c.count()) >= min_fraction * total) ++n;
    return n;
}

namespace detail {

inline void check_axis(const GridSet& s, int axis) {
    require(axis >= 0 && axis < s.dim(), ErrorCode::InvalidArgument, "axis out of range");
}

/// Occupied-cell counts per lattice slice along `axis`, starting at the bounding-box minimum.
inline std::vector<std::size_t> slice_counts(const GridSet& s, int axis) {
    const BoundingBox box = bounding_box(s);
    if (box.empty()) return {};
    std::vector<std::size_t> counts(static_cast<std::size_t>(box.hi[axis] - box.lo[axis] + 1), 0);
    for (std::size_t f = 0; f < s.size(); ++f)
        if (s.occupied(f)) ++counts[static_cast<std::size_t>(s.coords(f)[axis] - box.lo[axis])];
    return counts;
}

} // namespace detail

/// U(t): volume of the set inside the slab 0 < x_axis < t, with x_axis measured
/// from the lower face of the set's bounding box. Piecewise linear in t, so
/// differences over whole slices are exact sums of slice areas.
inline double cross_section_mass(const GridSet& s, int axis, double t) {
    detail::check_axis(s, axis);
    const auto counts = detail::slice_counts(s, axis);
    const double h = s.spacing();
    const double area_unit = std::pow(h, s.dim() - 1);
    CompensatedSum total;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        const double covered = std::clamp(t - h * static_cast<double>(j), 0.0, h);
        if (covered > 0.0) total.add(area_unit * static_cast<double>(counts[j]) * covered);
    }
    return total.value();
}

/// Area of the lattice slice containing the bounding-box-relative coordinate t
/// (slice j spans [j h, (j+1) h)); the forward difference of cross_section_mass.
inline double cross_section_area(const GridSet& s, int axis, double t) {
    detail::check_axis(s, axis);
    const auto counts = detail::slice_counts(s, axis);
    if (t < 0.0 || counts.empty()) return 0.0;
    const auto j = static_cast<std::size_t>(std::floor(t / s.spacing() + 1e-9));
    if (j >= counts.size()) return 0.0;
    return std::pow(s.spacing(), s.dim() - 1) * static_cast<double>(counts[j]);
}

/// Lattice-aligned cut position nearest to t (bounding-box relative), in slices.
inline int cut_slice(const GridSet& s, double t) { return static_cast<int>(std::lround(t / s.spacing())); }

/// H^(n-1) of the set's interior on the lattice plane nearest to t: the area of
/// faces shared by occupied cells on both sides of the plane.
inline double cut_area(const GridSet& s, int axis, double t) {
    detail::check_axis(s, axis);
    const BoundingBox box = bounding_box(s);
    if (box.empty()) return 0.0;
    const int k = box.lo[axis] + cut_slice(s, t);
    std::size_t shared = 0;
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!s.occupied(f)) continue;
        Index c = s.coords(f);
        if (c[axis] != k) continue;
        c[axis] -= 1;
        if (s.occupied(c)) ++shared;
    }
    return std::pow(s.spacing(), s.dim() - 1) * static_cast<double>(shared);
}

} // namespace ldlab
