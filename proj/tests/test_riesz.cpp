#include <algorithm>
#include <numbers>
#include <random>
#include <sstream>

#include "ldlab/energy.hpp"
#include "ldlab/riesz.hpp"
#include "ldlab/shapes.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ldlab;

namespace {

constexpr double kPi = std::numbers::pi;
const Kernel kCoulomb{3, 1.0};

GridSet unit_ball(double h) {
    return rasterize(lattice_for_radius(3, 1.0, h), [](const Point& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1.0; });
}

GridSet random_cells(int n, int side, double h, double fill, std::uint64_t seed) {
    GridSet s = GridSet::centered(n, Index{side, side, side}, h);
    std::mt19937_64 g(seed);
    std::bernoulli_distribution coin(fill);
    for (std::size_t f = 0; f < s.size(); ++f)
        if (!s.on_margin(s.coords(f)) && coin(g)) s.set(f, true);
    return s;
}

// The same cells moved by `shift` on a lattice with identical shape.
GridSet translated(const GridSet& s, Index shift) {
    GridSet out = s.empty_like();
    for (std::size_t f : s.occupied_indices()) {
        Index c = s.coords(f);
        for (int a = 0; a < 3; ++a) c[a] += shift[a];
        out.set(c, true);
    }
    return out;
}

GridSet transposed(const GridSet& s) {
    GridSet out = s.empty_like();
    for (std::size_t f : s.occupied_indices()) {
        const Index c = s.coords(f);
        out.set(Index{c[2], c[0], c[1]}, true);
    }
    return out;
}

} // namespace

TEST(Kernel, RejectsInadmissibleAlpha) {
    EXPECT_LDLAB_ERROR((Kernel{3, 3.0}.validate()), ErrorCode::InvalidKernel);
    EXPECT_LDLAB_ERROR((Kernel{3, 0.0}.validate()), ErrorCode::InvalidKernel);
    EXPECT_LDLAB_ERROR((Kernel{4, 1.0}.validate(true)), ErrorCode::InvalidKernel);
    EXPECT_NO_THROW((Kernel{4, 1.0}.validate(false)));
}

TEST(Kernel, DimensionMismatch) {
    const GridSet s = make_ball(3, 0.5, 0.1);
    EXPECT_LDLAB_ERROR(nonlocal_energy(s, Kernel{2, 1.0}), ErrorCode::DimensionMismatch);
    EXPECT_LDLAB_ERROR(potential_at(s, Kernel{2, 1.0}, Point{0, 0, 0}), ErrorCode::DimensionMismatch);
    EXPECT_LDLAB_ERROR(potential_field(s, Kernel{2, 1.0}), ErrorCode::DimensionMismatch);
}

TEST(SelfEnergy, QuadratureMatchesIndependentMonteCarlo) {
    for (auto [n, alpha] : {std::pair{3, 1.0}, std::pair{2, 0.5}, std::pair{3, 0.5}}) {
        const double quad = self_energy_quadrature(n, alpha);
        const auto mc = oracle::cell_self_mc(n, alpha, 10'000'000, 17);
        EXPECT_LT(std::abs(quad - mc.value), 4.0 * mc.stderr_ + 1e-12) << n << " " << alpha;
        EXPECT_LT(rel_err(mc.value, quad), 0.005);
    }
}

TEST(SelfEnergy, LibraryMonteCarloAgrees) {
    const double quad = self_energy_quadrature(3, 1.0);
    const auto mc = self_energy_monte_carlo(3, 1.0, 1'000'000, 5);
    EXPECT_GT(mc.value, 0.0);
    EXPECT_LT(std::abs(quad - mc.value), 4.0 * mc.stderr_);
}

TEST(SelfEnergy, TableRoundTrip) {
    SelfEnergyTable t;
    t.put(3, 1.0, "quadrature", {1.8823126444, 0.0});
    t.put(2, 0.5, "monte_carlo", {1.2, 0.001});
    std::stringstream io;
    t.save(io);
    SelfEnergyTable back = SelfEnergyTable::load(io);
    EXPECT_NEAR(back.get(3, 1.0), 1.8823126444, 1e-12);
    const auto e = back.entries();
    ASSERT_EQ(e.size(), 2u);
    EXPECT_NEAR((e.at({2, 0.5, "monte_carlo"}).stderr_), 0.001, 1e-15);
}

TEST(PotentialAt, CenterOfUnitBall) {
    EXPECT_LT(rel_err(potential_at(unit_ball(1.0 / 32), kCoulomb, Point{0, 0, 0}), 2.0 * kPi), 0.01);
}

TEST(PotentialAt, SurfaceOfUnitBall) {
    const double v = potential_at(unit_ball(1.0 / 32), kCoulomb, Point{1.0, 0.0, 0.0});
    EXPECT_LT(rel_err(v, oracle::newton_ball_potential(1.0)), 0.02);
    EXPECT_NEAR(oracle::newton_ball_potential(1.0), 4.0 * kPi / 3.0, 1e-12);
}

TEST(PotentialAt, FarField) {
    const GridSet s = random_blob(3, 0.7, 0.1, 3);
    for (double alpha : {0.5, 1.0, 2.0}) {
        const double m = volume(s);
        const double v = potential_at(s, Kernel{3, alpha}, Point{100.0, 0.0, 0.0});
        EXPECT_LT(rel_err(v, m / std::pow(100.0, alpha)), 1e-3);
    }
}

TEST(PotentialField, EmptySetIsZero) {
    const GridSet s(3, Index{8, 8, 8}, 0.1);
    for (double v : potential_field(s, kCoulomb)) EXPECT_EQ(v, 0.0);
}

TEST(PotentialField, SingleCellPointMass) {
    const double h = 0.05;
    GridSet s = GridSet::centered(3, Index{41, 11, 11}, h);
    s.set(Index{2, 5, 5}, true);
    for (auto method : {EnergyMethod::convolution, EnergyMethod::direct}) {
        const auto u = potential_field(s, kCoulomb, method);
        const double d = 30 * h;
        EXPECT_LT(rel_err(u[s.index(Index{32, 5, 5})], h * h * h / d), 0.01);
    }
}

TEST(PotentialField, BoundedByLocalIntegralPlusMass) {
    // sup v_F <= int_{B_1} |y|^-alpha dy + m
    for (std::uint64_t seed : {1u, 2u}) {
        const GridSet s = random_blob(3, 2.0, 0.1, seed);
        const auto u = potential_field(s, kCoulomb);
        EXPECT_LE(*std::max_element(u.begin(), u.end()), 2.0 * kPi + volume(s));
    }
}

TEST(PotentialField, DirectAndConvolutionAgree) {
    const GridSet s = rasterize(lattice_for_radius(3, 0.5, 1.0 / 32),
                                [](const Point& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 0.25; });
    const auto a = potential_field(s, kCoulomb, EnergyMethod::direct);
    const auto b = potential_field(s, kCoulomb, EnergyMethod::convolution);
    double worst = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) worst = std::max(worst, std::abs(a[f] - b[f]) / a[f]);
    EXPECT_LE(worst, 0.005);
}

TEST(NonlocalEnergy, UnitBall) {
    const double v = nonlocal_energy(unit_ball(1.0 / 32), kCoulomb);
    EXPECT_LT(rel_err(v, oracle::kNewtonBallEnergy), 0.02);
}

TEST(NonlocalEnergy, TwoCells) {
    const double h = 0.1;
    const double c = self_energy(3, 1.0);
    for (int gap : {3, 6, 10}) {
        GridSet s = GridSet::centered(3, Index{14, 5, 5}, h);
        s.set(Index{2, 2, 2}, true);
        s.set(Index{2 + gap, 2, 2}, true);
        const double d = gap * h;
        const double expect = 2.0 * std::pow(h, 6) / d + 2.0 * c * std::pow(h, 5);
        EXPECT_LT(rel_err(nonlocal_energy(s, kCoulomb, EnergyMethod::direct), expect), 0.01);
        EXPECT_LT(rel_err(nonlocal_energy(s, kCoulomb, EnergyMethod::convolution), expect), 0.01);
    }
}

TEST(NonlocalEnergy, ScalingUnderDilation) {
    const double h = 1.0 / 16;
    auto ellipsoid = [&](double l) {
        return rasterize(lattice_for_radius(3, 0.9 * l, h), [&](const Point& x) {
            const double a = x[0] / (0.9 * l), b = x[1] / (0.6 * l), c = x[2] / (0.45 * l);
            return a * a + b * b + c * c < 1.0;
        });
    };
    const double v1 = nonlocal_energy(ellipsoid(1.0), kCoulomb);
    const double v2 = nonlocal_energy(ellipsoid(2.0), kCoulomb);
    EXPECT_LT(rel_err(v2, std::pow(2.0, 5.0) * v1), 0.01);
}

TEST(NonlocalEnergy, DirectAndConvolutionAgreeOnRandomSets) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const int side = 16 + 4 * static_cast<int>(seed);
        const GridSet s = random_cells(3, side, 1.0 / 24, 0.3, seed);
        const double a = nonlocal_energy(s, kCoulomb, EnergyMethod::direct);
        const double b = nonlocal_energy(s, kCoulomb, EnergyMethod::convolution);
        EXPECT_LE(std::abs(a - b) / a, 0.005);
    }
    const GridSet s2 = random_cells(2, 32, 1.0 / 32, 0.4, 9);
    const Kernel k2{2, 0.7};
    EXPECT_LE(rel_err(nonlocal_energy(s2, k2, EnergyMethod::convolution), nonlocal_energy(s2, k2, EnergyMethod::direct)),
              0.005);
}

TEST(NonlocalEnergy, TranslationAndPermutationSymmetry) {
    GridSet s = random_cells(3, 14, 0.1, 0.0, 1);
    const GridSet src = random_cells(3, 10, 0.1, 0.35, 3);
    for (std::size_t f : src.occupied_indices()) {
        const Index c = src.coords(f);
        s.set(Index{c[0] + 1, c[1] + 2, c[2] + 1}, true);
    }
    const double base = nonlocal_energy(s, kCoulomb, EnergyMethod::direct);
    EXPECT_EQ(nonlocal_energy(translated(s, Index{1, -1, 2}), kCoulomb, EnergyMethod::direct), base);
    EXPECT_NEAR(nonlocal_energy(transposed(s), kCoulomb, EnergyMethod::direct), base, 1e-12 * base);
    EXPECT_LE(rel_err(nonlocal_energy(translated(s, Index{2, 1, -1}), kCoulomb), base), 1e-9);
}

TEST(NonlocalEnergy, AddingCellsIncreasesEnergy) {
    GridSet s = random_cells(3, 12, 0.1, 0.2, 8);
    double prev = nonlocal_energy(s, kCoulomb, EnergyMethod::direct);
    int added = 0;
    for (std::size_t f = 0; f < s.size() && added < 10; ++f) {
        if (s.occupied(f) || s.on_margin(s.coords(f))) continue;
        s.set(f, true);
        const double v = nonlocal_energy(s, kCoulomb, EnergyMethod::direct);
        EXPECT_GT(v, prev);
        prev = v;
        ++added;
    }
}

TEST(NonlocalEnergy, SuperadditivityGap) {
    const GridSet all = random_cells(3, 12, 0.1, 0.4, 21);
    GridSet a = all.empty_like(), b = all.empty_like();
    for (std::size_t f : all.occupied_indices()) (all.coords(f)[0] < 6 ? a : b).set(f, true);
    const double vu = nonlocal_energy(all, kCoulomb, EnergyMethod::direct);
    const double va = nonlocal_energy(a, kCoulomb, EnergyMethod::direct);
    const double vb = nonlocal_energy(b, kCoulomb, EnergyMethod::direct);
    const double cross = cross_energy(a, b, kCoulomb, Index{0, 0, 0}, EnergyMethod::direct);
    EXPECT_GT(cross, 0.0);
    EXPECT_NEAR(vu, va + vb + 2.0 * cross, 1e-11 * vu);
    const double cross_fft = cross_energy(a, b, kCoulomb, Index{0, 0, 0});
    EXPECT_LE(rel_err(cross_fft, cross), 1e-9);
}

TEST(NonlocalEnergy, ShiftedCrossEnergyAgrees) {
    const GridSet a = make_ball(3, 0.3, 0.1);
    const double d = cross_energy(a, a, kCoulomb, Index{20, 0, 0}, EnergyMethod::direct);
    const double c = cross_energy(a, a, kCoulomb, Index{20, 0, 0});
    EXPECT_LE(rel_err(c, d), 1e-9);
    const double m = volume(a);
    EXPECT_LT(rel_err(d, m * m / 2.0), 0.01); // two compact blobs 2 apart
}

TEST(BallPotential, MatchesNewtonianClosedForm) {
    for (double r : {0.0, 0.3, 0.7, 1.0, 1.5, 4.0})
        EXPECT_NEAR(ball_potential(kCoulomb, r), oracle::newton_ball_potential(r), 1e-7);
}

TEST(BallPotential, RayFormulaAgreesWithShellFormula) {
    // n = 3 has both reductions; the ray one is what other dimensions use
    for (double alpha : {0.5, 1.0, 2.0, 2.5})
        for (double s : {0.0, 0.5, 1.0, 1.2, 3.0}) {
            const Kernel k{3, alpha};
            EXPECT_LT(rel_err(detail::ray_potential(k, s), ball_potential(k, s)), 1e-6) << alpha << " " << s;
        }
}

TEST(BallSelfEnergy, ClosedFormAndMonteCarlo) {
    EXPECT_LT(rel_err(ball_self_energy(kCoulomb), oracle::kNewtonBallEnergy), 1e-6);
    const auto mc = oracle::ball_energy_mc(3, 1.0, 10'000'000, 99);
    EXPECT_LT(std::abs(mc.value - ball_self_energy(kCoulomb)), 4.0 * mc.stderr_);
    EXPECT_LT(rel_err(mc.value, ball_self_energy(kCoulomb)), 0.005);
}

TEST(BallSelfEnergy, OtherDimensionsAgainstMonteCarlo) {
    for (auto [n, alpha] : {std::pair{2, 0.5}, std::pair{2, 0.9}, std::pair{4, 1.0}, std::pair{3, 0.5}}) {
        const Kernel k{n, alpha};
        const auto mc = oracle::ball_energy_mc(n, alpha, 4'000'000, 7);
        EXPECT_LT(std::abs(mc.value - ball_self_energy(k)), 4.0 * mc.stderr_) << n << " " << alpha;
        EXPECT_LT(rel_err(mc.value, ball_self_energy(k)), 0.005);
    }
}

TEST(BallProfile, MonotoneOutsideAndFarField) {
    for (double alpha : {0.5, 1.0, 2.0, 2.5}) {
        const Kernel k{3, alpha};
        const auto prof = ball_profile(k, 6.0, 61);
        for (std::size_t i = 1; i < prof.size(); ++i)
            if (prof[i - 1].radius >= 1.0) {
                EXPECT_LT(prof[i].potential, prof[i - 1].potential);
            }
        const double far = ball_potential(k, 1000.0);
        EXPECT_LT(rel_err(far, unit_ball_volume(3) / std::pow(1000.0, alpha)), 1e-3);
    }
    const Kernel k4{4, 1.5};
    EXPECT_LT(rel_err(ball_potential(k4, 1000.0), unit_ball_volume(4) / std::pow(1000.0, 1.5)), 1e-3);
}

TEST(BallProfile, BoundaryExponents) {
    EXPECT_NEAR(boundary_exponent(Kernel{3, 1.0}, 1e-4, 1e-2), 1.0, 0.05);
    EXPECT_NEAR(boundary_exponent(Kernel{3, 2.5}, 1e-4, 1e-2), 0.5, 0.05);
    EXPECT_NEAR(boundary_exponent(Kernel{3, 0.5}, 1e-4, 1e-2), 1.0, 0.05);
}

TEST(BallProfile, LogarithmicCaseRatioDrift) {
    const auto ratios = boundary_log_ratios(Kernel{3, 2.0}, 1e-4, 1e-2);
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    EXPECT_LE(*hi / *lo - 1.0, 0.10);
}

TEST(BallProfile, RejectsAlphaAtLeastN) {
    EXPECT_LDLAB_ERROR(ball_profile(Kernel{3, 3.0}, 2.0, 10), ErrorCode::InvalidKernel);
    EXPECT_LDLAB_ERROR(ball_profile(Kernel{3, 3.5}, 2.0, 10), ErrorCode::InvalidKernel);
}

TEST(PosdefGap, IdenticalSetsGiveZero) {
    const GridSet f = random_blob(3, 0.4, 0.1, 2);
    for (double c : {0.0, 3.0, -7.5}) EXPECT_NEAR(posdef_gap(f, f, kCoulomb, c), 0.0, 1e-12 * nonlocal_energy(f, kCoulomb));
}

TEST(PosdefGap, BallVersusCube) {
    const double h = 1.0 / 12;
    const GridSet cube = make_box(3, {0.75, 0.75, 0.75}, h);
    const GridSet lattice = cube.padded(Index{4, 4, 4}, Index{4, 4, 4}).empty_like();
    GridSet f = ball_by_count(lattice, Point{0.0, 0.0, 0.0}, cube.count());
    GridSet g = lattice.empty_like();
    for (std::size_t i : cube.occupied_indices()) {
        const Point p = cube.center(cube.coords(i));
        Index c{0, 0, 0};
        for (int a = 0; a < 3; ++a) c[a] = static_cast<int>(std::lround((p[a] - lattice.origin()[a]) / h));
        g.set(c, true);
    }
    ASSERT_EQ(f.count(), g.count());
    const double tol = 1e-3 * std::max(nonlocal_energy(f, kCoulomb), nonlocal_energy(g, kCoulomb));
    const double g0 = posdef_gap(f, g, kCoulomb, 0.0);
    EXPECT_GE(g0, -tol);
    EXPECT_GE(posdef_gap(g, f, kCoulomb, 0.0), -tol);
    for (double c : {1.0, 10.0, -4.0}) {
        const double gc = posdef_gap(f, g, kCoulomb, c);
        EXPECT_GE(gc, -tol);
        EXPECT_LE(std::abs(gc - g0), 1e-6 * std::max(std::abs(g0), nonlocal_energy(f, kCoulomb)));
    }
}

TEST(PosdefGap, MassMismatch) {
    const GridSet f = make_ball(3, 0.5, 0.1);
    GridSet g = f;
    std::size_t removed = 0;
    for (std::size_t i : f.occupied_indices())
        if (removed < 2) {
            g.set(i, false);
            ++removed;
        }
    EXPECT_LDLAB_ERROR(posdef_gap(f, g, kCoulomb, 0.0), ErrorCode::MassMismatch);
}
