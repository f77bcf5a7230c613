#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ldlab/error.hpp"

namespace ldlab {

using Index = std::array<int, 3>;
using Point = std::array<double, 3>;

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Physical extent of a lattice box. Energies are always evaluated over the
/// whole space; the periodic flag only describes internal convolution buffers.
struct BoxDomain {
    std::array<double, 3> extent{0.0, 0.0, 0.0};
    bool periodic = false;
};

/**
 * Binary occupancy on a regular lattice in 2 or 3 dimensions.
 *
 * Cell (i0, i1, i2) has its center at origin + h * i. Cells are stored
 * row-major with the last axis fastest; a 2-D set uses shape[2] == 1.
 * The outermost layer of cells is a mandatory empty margin, so every set is
 * compactly contained in its box and nothing ever touches the boundary.
 */
class GridSet {
public:
    GridSet() = default;

    GridSet(int dim, Index shape, double h, Point origin = {0.0, 0.0, 0.0})
        : dim_(dim), shape_(shape), h_(h), origin_(origin) {
        require(dim == 2 || dim == 3, ErrorCode::InvalidArgument, "grid dimension must be 2 or 3");
        require(h > 0.0 && std::isfinite(h), ErrorCode::InvalidArgument, "spacing h must be positive");
        if (dim == 2) {
            shape_[2] = 1;
            origin_[2] = 0.0;
        }
        for (int a = 0; a < dim; ++a)
            require(shape_[a] >= 3, ErrorCode::BoxTooSmall, "each axis needs at least 3 cells (margin + interior)");
        cells_.assign(static_cast<std::size_t>(shape_[0]) * shape_[1] * shape_[2], 0);
    }

    /// Box of the given cell counts centered on the physical point `center`.
    static GridSet centered(int dim, Index shape, double h, Point center = {0.0, 0.0, 0.0}) {
        Point origin{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) origin[a] = center[a] - 0.5 * h * (shape[a] - 1);
        return GridSet(dim, shape, h, origin);
    }

    int dim() const { return dim_; }
    const Index& shape() const { return shape_; }
    double spacing() const { return h_; }
    const Point& origin() const { return origin_; }
    std::size_t size() const { return cells_.size(); }
    double cell_volume() const { return std::pow(h_, dim_); }

    BoxDomain domain() const {
        BoxDomain box;
        for (int a = 0; a < dim_; ++a) box.extent[a] = h_ * shape_[a];
        return box;
    }

    std::size_t index(const Index& i) const {
        return (static_cast<std::size_t>(i[0]) * shape_[1] + i[1]) * shape_[2] + i[2];
    }

    Index coords(std::size_t flat) const {
        Index i{0, 0, 0};
        i[2] = static_cast<int>(flat % shape_[2]);
        flat /= shape_[2];
        i[1] = static_cast<int>(flat % shape_[1]);
        i[0] = static_cast<int>(flat / shape_[1]);
        return i;
    }

    bool in_box(const Index& i) const {
        for (int a = 0; a < 3; ++a)
            if (i[a] < 0 || i[a] >= shape_[a]) return false;
        return true;
    }

    bool on_margin(const Index& i) const {
        for (int a = 0; a < dim_; ++a)
            if (i[a] <= 0 || i[a] >= shape_[a] - 1) return true;
        return false;
    }

    Point center(const Index& i) const {
        Point p{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + h_ * i[a];
        return p;
    }

    bool occupied(std::size_t flat) const { return cells_[flat] != 0; }
    bool occupied(const Index& i) const { return in_box(i) && cells_[index(i)] != 0; }

    void set(const Index& i, bool value) {
        require(in_box(i), ErrorCode::BoxTooSmall, "cell outside the lattice");
        if (value) require(!on_margin(i), ErrorCode::BoxTooSmall, "occupied cell on the empty margin");
        cells_[index(i)] = value ? 1 : 0;
    }
    void set(std::size_t flat, bool value) { set(coords(flat), value); }

    const std::vector<std::uint8_t>& cells() const { return cells_; }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto v : cells_) c += v;
        return c;
    }

    bool empty() const { return count() == 0; }

    /// True when both sets live on the same lattice (dimension, shape, spacing, origin).
    bool same_lattice(const GridSet& other) const {
        return dim_ == other.dim_ && shape_ == other.shape_ && h_ == other.h_ && origin_ == other.origin_;
    }

    /// Flat indices of occupied cells, ascending.
    std::vector<std::size_t> occupied_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t f = 0; f < cells_.size(); ++f)
            if (cells_[f]) out.push_back(f);
        return out;
    }

    /// Same set with `lower`/`upper` extra empty cells per axis.
    GridSet padded(Index lower, Index upper) const {
        Index shape = shape_;
        Point origin = origin_;
        for (int a = 0; a < dim_; ++a) {
            shape[a] += lower[a] + upper[a];
            origin[a] -= h_ * lower[a];
        }
        GridSet out(dim_, shape, h_, origin);
        for (std::size_t f = 0; f < cells_.size(); ++f) {
            if (!cells_[f]) continue;
            Index i = coords(f);
            for (int a = 0; a < dim_; ++a) i[a] += lower[a];
            out.cells_[out.index(i)] = 1;
        }
        return out;
    }

    /// Empty set on the same lattice.
    GridSet empty_like() const { return GridSet(dim_, shape_, h_, origin_); }

    bool operator==(const GridSet& other) const { return same_lattice(other) && cells_ == other.cells_; }

private:
    int dim_ = 3;
    Index shape_{3, 3, 3};
    double h_ = 1.0;
    Point origin_{0.0, 0.0, 0.0};
    std::vector<std::uint8_t> cells_ = std::vector<std::uint8_t>(27, 0);
};

/// Occupies every interior cell whose center satisfies `inside`.
inline GridSet rasterize(GridSet lattice, const std::function<bool(const Point&)>& inside) {
    const Index& s = lattice.shape();
    for (int i = 1; i < s[0] - 1; ++i)
        for (int j = 1; j < s[1] - 1; ++j)
            for (int k = (lattice.dim() == 3 ? 1 : 0); k < (lattice.dim() == 3 ? s[2] - 1 : 1); ++k) {
                const Index idx{i, j, k};
                if (inside(lattice.center(idx))) lattice.set(idx, true);
            }
    return lattice;
}

// ---------------------------------------------------------------------------
// Raster dump/load.
//
// Header line: "LDLAB1 n=<n> shape=<s1,s2[,s3]> h=<h> origin=<o1,...>\n"
// followed by one byte (0 or 1) per cell in storage order. Reals use 17
// significant digits so a dump/load round trip is exact.

inline std::string raster_header(const GridSet& s) {
    std::ostringstream out;
    out.precision(17);
    out << "LDLAB1 n=" << s.dim() << " shape=";
    for (int a = 0; a < s.dim(); ++a) out << (a ? "," : "") << s.shape()[a];
    out << " h=" << s.spacing() << " origin=";
    for (int a = 0; a < s.dim(); ++a) out << (a ? "," : "") << s.origin()[a];
    out << "\n";
    return out.str();
}

inline void write_raster(std::ostream& out, const GridSet& s) {
    const std::string header = raster_header(s);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(s.cells().data()), static_cast<std::streamsize>(s.size()));
    require(static_cast<bool>(out), ErrorCode::Format, "raster write failed");
}

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

inline double parse_real(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Format, std::string("bad number for ") + what + ": '" + text + "'");
    }
}

} // namespace detail

inline GridSet read_raster(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::Format, "missing raster header");
    std::istringstream fields(line);
    std::string magic, n_field, shape_field, h_field, origin_field, extra;
    fields >> magic >> n_field >> shape_field >> h_field >> origin_field;
    require(magic == "LDLAB1", ErrorCode::Format, "bad raster magic '" + magic + "'");
    require(!(fields >> extra), ErrorCode::Format, "trailing header fields");
    auto value_of = [](const std::string& field, const std::string& key) {
        require(field.rfind(key + "=", 0) == 0, ErrorCode::Format, "expected '" + key + "=' in raster header");
        return field.substr(key.size() + 1);
    };
    const int n = static_cast<int>(detail::parse_real(value_of(n_field, "n"), "n"));
    require(n == 2 || n == 3, ErrorCode::Format, "raster dimension must be 2 or 3");
    const auto shape_parts = detail::split(value_of(shape_field, "shape"), ',');
    const auto origin_parts = detail::split(value_of(origin_field, "origin"), ',');
    require(static_cast<int>(shape_parts.size()) == n && static_cast<int>(origin_parts.size()) == n,
            ErrorCode::Format, "shape/origin arity does not match n");
    Index shape{1, 1, 1};
    Point origin{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) {
        shape[a] = static_cast<int>(detail::parse_real(shape_parts[a], "shape"));
        origin[a] = detail::parse_real(origin_parts[a], "origin");
    }
    const double h = detail::parse_real(value_of(h_field, "h"), "h");
    GridSet out(n, shape, h, origin);
    std::vector<char> bytes(out.size());
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<std::size_t>(in.gcount()) == bytes.size(), ErrorCode::Format, "raster payload truncated");
    require(in.peek() == std::char_traits<char>::eof(), ErrorCode::Format, "raster payload has trailing bytes");
    for (std::size_t f = 0; f < bytes.size(); ++f) {
        require(bytes[f] == 0 || bytes[f] == 1, ErrorCode::Format, "raster cells must be 0 or 1");
        if (bytes[f]) out.set(f, true);
    }
    return out;
}

} // namespace ldlab
