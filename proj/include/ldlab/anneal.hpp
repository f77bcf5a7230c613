#pragma once

// Mass-preserving simulated annealing on a fixed lattice.
//
// A move removes one occupied boundary cell a and occupies one empty cell b:
// a frontier cell (boundary swap) or, with probability far_weight, any empty
// interior cell of the box (far swap). The perimeter change is local (Crofton
// pair counts by default); the nonlocal change is exact,
//
//   dV = 2 u(b) - 2 u(a) - 2 K(b - a) + 2 K(0),
//
// with u(i) = sum_{j in F} K(i - j) kept current on occupied cells and u(b)
// summed on demand.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "ldlab/energy.hpp"
#include "ldlab/error.hpp"
#include "ldlab/geometry.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/parallel.hpp"
#include "ldlab/riesz.hpp"
#include "ldlab/shapes.hpp"

namespace ldlab {

struct AnnealConfig {
    Kernel kernel{3, 1.0};
    std::size_t target_cells = 0;  ///< 0: take the count of the initial set
    std::size_t budget = 100000;   ///< proposed moves
    double initial_temperature = -1.0; ///< < 0: 0.5 h^(n-1)
    double decay = 0.999;          ///< temperature factor per sweep
    std::size_t sweep_moves = 100; ///< moves per sweep; 0: one per occupied cell
    double far_weight = 0.05;      ///< probability of a far swap
    std::uint64_t seed = 1;
    std::size_t snapshot_period = 100; ///< sweeps between trace entries
    PerimeterMethod move_perimeter = PerimeterMethod::crofton; ///< facet or crofton
    EnergyOptions report{};        ///< estimators for the reported final energy
    std::function<void(std::size_t move, const GridSet&)> on_snapshot; ///< optional
};

struct TracePoint {
    std::size_t move = 0;
    double temperature = 0.0;
    double energy = 0.0;      ///< current, move-perimeter model
    double best_energy = 0.0; ///< best so far, same model
    double acceptance = 0.0;  ///< accepted / proposed since the previous entry
};

struct MinimizeResult {
    GridSet set;
    std::vector<TracePoint> trace;
    double initial_energy = 0.0; ///< move-perimeter model
    double best_energy = 0.0;    ///< move-perimeter model, value of `set`
    EnergyBreakdown energy;      ///< `set` under cfg.report estimators
    double asymmetry = 0.0;      ///< Fraenkel asymmetry to the same-volume ball
    std::size_t components = 0;
    std::size_t major_components = 0; ///< components with >= 5% of the mass
    double energy_drift = 0.0; ///< |incremental V - recomputed V| / V at the end
    std::size_t accepted = 0;
};

namespace detail {

/// Vector with O(1) insert/erase by value, for cells indexed 0..size-1.
class IndexedSet {
public:
    explicit IndexedSet(std::size_t universe) : pos_(universe, -1) {}
    bool contains(std::size_t f) const { return pos_[f] >= 0; }
    void insert(std::size_t f) {
        if (contains(f)) return;
        pos_[f] = static_cast<std::ptrdiff_t>(items_.size());
        items_.push_back(f);
    }
    void erase(std::size_t f) {
        if (!contains(f)) return;
        const std::size_t at = static_cast<std::size_t>(pos_[f]);
        items_[at] = items_.back();
        pos_[items_[at]] = static_cast<std::ptrdiff_t>(at);
        items_.pop_back();
        pos_[f] = -1;
    }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    std::size_t operator[](std::size_t i) const { return items_[i]; }

private:
    std::vector<std::ptrdiff_t> pos_;
    std::vector<std::size_t> items_;
};

class AnnealState {
public:
    AnnealState(const GridSet& init, const AnnealConfig& cfg)
        : lat_(init.empty_like()), dim_(init.dim()), shape_(init.shape()), occ_(init.size(), 0), nb_(init.size(), 0),
          u_(init.size(), 0.0), boundary_(init.size()), frontier_(init.size()), occupied_(init.size()),
          table_(cfg.kernel, init.dim(), init.shape(), init.spacing()) {
        require(cfg.move_perimeter != PerimeterMethod::surface_mesh, ErrorCode::InvalidArgument,
                "annealing needs a local perimeter (facet or crofton)");
        const double hn1 = std::pow(init.spacing(), init.dim() - 1);
        if (cfg.move_perimeter == PerimeterMethod::crofton) {
            const auto& st = crofton_stencil(dim_);
            offsets_ = st.offsets;
            for (double w : st.weights) weights_.push_back(w * hn1);
        } else {
            for (int a = 0; a < dim_; ++a) {
                Index d{0, 0, 0};
                d[a] = 1;
                offsets_.push_back(d);
                weights_.push_back(hn1);
            }
        }
        faces_ = face_offsets(dim_);
        for (std::size_t f = 0; f < init.size(); ++f)
            if (init.occupied(f)) occ_[f] = 1;
        cell_pos_.assign(occ_.size(), -1);
        for (std::size_t f = 0; f < occ_.size(); ++f) {
            if (!occ_[f]) continue;
            occupied_.insert(f);
            cell_pos_[f] = static_cast<std::ptrdiff_t>(cells_.size());
            cells_.push_back(lat_.coords(f));
            for_faces(f, [&](std::size_t g) { ++nb_[g]; });
        }
        for (std::size_t f = 0; f < occ_.size(); ++f) refresh(f);
        // potentials and energies
        for (std::size_t q = 0; q < occupied_.size(); ++q) u_[occupied_[q]] = sum_kernel(lat_.coords(occupied_[q]));
        CompensatedSum v;
        for (std::size_t q = 0; q < occupied_.size(); ++q) v.add(u_[occupied_[q]]);
        V_ = v.value();
        P_ = perimeter(init, cfg.move_perimeter);
    }

    double energy() const { return P_ + V_; }
    double nonlocal() const { return V_; }
    std::size_t count() const { return occupied_.size(); }
    const IndexedSet& boundary() const { return boundary_; }
    const IndexedSet& frontier() const { return frontier_; }
    const Index& shape() const { return shape_; }
    bool occupied(std::size_t f) const { return occ_[f] != 0; }

    bool interior(const Index& c) const {
        for (int a = 0; a < dim_; ++a)
            if (c[a] <= 0 || c[a] >= shape_[a] - 1) return false;
        return true;
    }

    GridSet snapshot() const {
        GridSet s = lat_;
        for (std::size_t q = 0; q < occupied_.size(); ++q) s.set(occupied_[q], true);
        return s;
    }

    /// sum_{j in F} K(c - j)
    double sum_kernel(const Index& c) const {
        double acc = 0.0;
        for (const auto& j : cells_) acc += table_(c[0] - j[0], c[1] - j[1], c[2] - j[2]);
        return acc;
    }

    /// Perimeter change from flipping cell f in the current state.
    double flip_perimeter(std::size_t f) const {
        const Index c = lat_.coords(f);
        const bool o = occ_[f] != 0;
        double d = 0.0;
        for (std::size_t k = 0; k < offsets_.size(); ++k) {
            const Index& off = offsets_[k];
            const Index p{c[0] + off[0], c[1] + off[1], c[2] + off[2]};
            const Index m{c[0] - off[0], c[1] - off[1], c[2] - off[2]};
            const bool op = lat_.in_box(p) && occ_[lat_.index(p)];
            const bool om = lat_.in_box(m) && occ_[lat_.index(m)];
            d += weights_[k] * ((o == op ? 1.0 : -1.0) + (o == om ? 1.0 : -1.0));
        }
        return d;
    }

    /// Energy change of moving cell a -> b; fills the pieces needed to commit.
    double propose(std::size_t a, std::size_t b, double& dP, double& dV, double& ub) {
        const Index ca = lat_.coords(a), cb = lat_.coords(b);
        dP = flip_perimeter(a);
        set_raw(a, false);
        dP += flip_perimeter(b);
        set_raw(a, true);
        ub = sum_kernel(cb);
        dV = 2.0 * ub - 2.0 * u_[a] - 2.0 * table_(cb[0] - ca[0], cb[1] - ca[1], cb[2] - ca[2]) + 2.0 * table_.self();
        return dP + dV;
    }

    void commit(std::size_t a, std::size_t b, double dP, double dV, double ub) {
        const Index ca = lat_.coords(a), cb = lat_.coords(b);
        // potentials of the cells that stay
        for (std::size_t q = 0; q < cells_.size(); ++q) {
            const Index& j = cells_[q];
            u_[lat_.index(j)] += table_(j[0] - cb[0], j[1] - cb[1], j[2] - cb[2]) - table_(j[0] - ca[0], j[1] - ca[1], j[2] - ca[2]);
        }
        u_[b] = ub - table_(cb[0] - ca[0], cb[1] - ca[1], cb[2] - ca[2]) + table_.self();
        u_[a] = 0.0;
        const auto at = cell_pos_[a];
        cells_[static_cast<std::size_t>(at)] = cb;
        cell_pos_[b] = at;
        cell_pos_[a] = -1;
        flip(a, false);
        flip(b, true);
        P_ += dP;
        V_ += dV;
    }

private:
    template <class F>
    void for_faces(std::size_t f, F&& fn) const {
        const Index c = lat_.coords(f);
        for (const auto& d : faces_) {
            const Index q{c[0] + d[0], c[1] + d[1], c[2] + d[2]};
            if (lat_.in_box(q)) fn(lat_.index(q));
        }
    }

    void set_raw(std::size_t f, bool v) { occ_[f] = v ? 1 : 0; }

    void refresh(std::size_t f) {
        const Index c = lat_.coords(f);
        const int full = 2 * dim_;
        if (occ_[f]) {
            frontier_.erase(f);
            if (nb_[f] < full)
                boundary_.insert(f);
            else
                boundary_.erase(f);
        } else {
            boundary_.erase(f);
            if (nb_[f] > 0 && interior(c))
                frontier_.insert(f);
            else
                frontier_.erase(f);
        }
    }

    void flip(std::size_t f, bool v) {
        occ_[f] = v ? 1 : 0;
        if (v)
            occupied_.insert(f);
        else
            occupied_.erase(f);
        for_faces(f, [&](std::size_t g) {
            nb_[g] += v ? 1 : -1;
            refresh(g);
        });
        refresh(f);
    }

private:
    GridSet lat_;
    int dim_;
    Index shape_;
    std::vector<std::uint8_t> occ_;
    std::vector<int> nb_;
    std::vector<double> u_;
    IndexedSet boundary_, frontier_, occupied_;
    std::vector<Index> cells_;
    std::vector<std::ptrdiff_t> cell_pos_;
    LatticeKernel table_;
    std::vector<Index> offsets_;
    std::vector<double> weights_;
    std::vector<Index> faces_;
    double P_ = 0.0;
    double V_ = 0.0;
};

} // namespace detail

inline MinimizeResult anneal(const GridSet& init, const AnnealConfig& cfg) {
    detail::check_kernel_for(init, cfg.kernel);
    require(!init.empty(), ErrorCode::EmptySet, "annealing an empty set");
    const std::size_t target = cfg.target_cells ? cfg.target_cells : init.count();
    require(init.count() == target, ErrorCode::MassMismatch, "initial set does not have the target mass");
    require(cfg.decay > 0.0 && cfg.decay < 1.0, ErrorCode::InvalidArgument, "decay must lie in (0, 1)");
    require(cfg.far_weight >= 0.0 && cfg.far_weight <= 1.0, ErrorCode::InvalidArgument, "far_weight must lie in [0, 1]");

    detail::AnnealState st(init, cfg);
    MinimizeResult res;
    res.initial_energy = st.energy();
    res.best_energy = st.energy();
    GridSet best = init;

    const double h = init.spacing();
    double T = cfg.initial_temperature >= 0.0 ? cfg.initial_temperature : 0.5 * std::pow(h, init.dim() - 1);
    const std::size_t sweep = cfg.sweep_moves ? cfg.sweep_moves : target;
    Rng rng(cfg.seed);
    const Index& sh = st.shape();
    std::size_t proposed_window = 0, accepted_window = 0, sweeps = 0;
    res.trace.push_back({0, T, st.energy(), res.best_energy, 0.0});

    for (std::size_t move = 1; move <= cfg.budget; ++move) {
        const std::size_t a = st.boundary()[rng.below(st.boundary().size())];
        std::size_t b = 0;
        if (rng.uniform() < cfg.far_weight) {
            // uniform empty interior cell; the box is mostly empty so rejection sampling is short
            while (true) {
                const Index c{1 + static_cast<int>(rng.below(static_cast<std::size_t>(sh[0] - 2))),
                              1 + static_cast<int>(rng.below(static_cast<std::size_t>(sh[1] - 2))),
                              init.dim() == 3 ? 1 + static_cast<int>(rng.below(static_cast<std::size_t>(sh[2] - 2))) : 0};
                const std::size_t f = init.index(c);
                if (!st.occupied(f)) {
                    b = f;
                    break;
                }
            }
        } else {
            if (st.frontier().empty()) break;
            b = st.frontier()[rng.below(st.frontier().size())];
        }
        const double r = rng.uniform();
        ++proposed_window;
        if (b != a) {
            double dP = 0.0, dV = 0.0, ub = 0.0;
            const double dE = st.propose(a, b, dP, dV, ub);
            const bool accept = dE <= 0.0 || (T > 0.0 && r < std::exp(-dE / T));
            if (accept) {
                st.commit(a, b, dP, dV, ub);
                ++accepted_window;
                ++res.accepted;
            }
        }
        if (move % sweep == 0) {
            ++sweeps;
            T *= cfg.decay;
            if (st.energy() < res.best_energy) {
                res.best_energy = st.energy();
                best = st.snapshot();
            }
            if (sweeps % std::max<std::size_t>(1, cfg.snapshot_period) == 0) {
                res.trace.push_back({move, T, st.energy(), res.best_energy,
                                     static_cast<double>(accepted_window) / static_cast<double>(proposed_window)});
                proposed_window = accepted_window = 0;
                if (cfg.on_snapshot) cfg.on_snapshot(move, st.snapshot());
            }
        }
    }
    if (st.energy() < res.best_energy) {
        res.best_energy = st.energy();
        best = st.snapshot();
    }
    // drift of the incremental nonlocal energy against a fresh exact sum on the final state
    {
        const double exact = nonlocal_energy(st.snapshot(), cfg.kernel, EnergyMethod::direct);
        res.energy_drift = exact > 0.0 ? std::abs(st.nonlocal() - exact) / exact : 0.0;
    }
    res.set = best;
    res.energy = total_energy(best, cfg.kernel, cfg.report);
    const GridSet ball = ball_by_count(lattice_for_radius(init.dim(), ball_radius(init.dim(), volume(best)), h),
                                       Point{0.0, 0.0, 0.0}, best.count());
    res.asymmetry = fraenkel_asymmetry(best, ball);
    res.components = components(best).size();
    res.major_components = major_component_count(best, 0.05);
    return res;
}

} // namespace ldlab
