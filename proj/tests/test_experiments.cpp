#include <algorithm>
#include <numbers>

#include "ldlab/experiments.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ldlab;

namespace {

const Kernel kCoulomb{3, 1.0};

// |F ∩ B_1(x)| by direct counting.
double local_mass(const GridSet& s, const Point& x) {
    std::size_t count = 0;
    for (std::size_t f : s.occupied_indices()) {
        const Point c = s.center(s.coords(f));
        double r2 = 0.0;
        for (int a = 0; a < s.dim(); ++a) r2 += (c[a] - x[a]) * (c[a] - x[a]);
        if (r2 <= 1.0 + 1e-12) ++count;
    }
    return static_cast<double>(count) * s.cell_volume();
}

} // namespace

TEST(Fission, ClosedFormAndBisectionAgree) {
    const FissionTable t = fission_scan(kCoulomb, log_masses(0.01, 100.0, 8));
    EXPECT_NEAR(t.crossover_closed_form, 1.756, 0.001);
    EXPECT_NEAR(t.crossover_bisection, t.crossover_closed_form, 1e-6);
    EXPECT_TRUE(t.monotone);
    const BallOracle o(kCoulomb);
    const double c1 = o.c1(), c2 = o.c2();
    const double expect = c1 * (std::cbrt(2.0) - 1.0) / (c2 * (1.0 - std::pow(2.0, -2.0 / 3.0)));
    EXPECT_NEAR(t.crossover_closed_form, expect, 1e-9);
}

TEST(Fission, OptimalCountRules) {
    const FissionTable t = fission_scan(kCoulomb, log_masses(0.001, 1000.0, 6));
    int prev = 1;
    for (const auto& r : t.rows) {
        if (r.m < 0.5 * t.crossover_closed_form) {
            EXPECT_EQ(r.best_balls, 1);
        }
        EXPECT_GE(r.best_balls, prev);
        EXPECT_LE(r.best_balls, static_cast<int>(std::ceil(r.m)) + 1);
        prev = r.best_balls;
    }
    EXPECT_GT(t.rows.back().best_balls, 1);
}

TEST(Fission, GridChainsMatchOracle) {
    const BallOracle o(kCoulomb);
    const double h = 1.0 / 12;
    for (double m : {2.0, 3.0}) {
        const ChainLayout c = chain_layout(3, m, h);
        EXPECT_LT(rel_err(chain_energy(kCoulomb, m, h).E, chain_energy_oracle(o, m, c.balls, c.spacing_cells * h)), 0.03);
    }
}

TEST(Fission, BisectionHelper) {
    EXPECT_NEAR(detail::bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-12), std::sqrt(2.0), 1e-10);
    EXPECT_LDLAB_ERROR(detail::bisect([](double x) { return x * x + 1.0; }, 0.0, 2.0, 1e-12), ErrorCode::PreconditionFailed);
}

TEST(Scaling, LogLogFitIsExactOnPowerLaws) {
    std::vector<double> x, y;
    for (double m : log_masses(0.1, 10.0, 5)) {
        x.push_back(m);
        y.push_back(3.0 * std::pow(m, 1.7));
    }
    const SlopeFit f = loglog_fit(x, y);
    EXPECT_NEAR(f.slope, 1.7, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
}

TEST(Scaling, SlopesOfBothBranches) {
    const ScalingReport r = scaling_sweep(kCoulomb, log_masses(1e-3, 1756.0, 4));
    EXPECT_NEAR(r.small.slope, 2.0 / 3.0, 0.05);
    EXPECT_NEAR(r.large.slope, 1.0, 0.05);
    EXPECT_GE(r.small.points, 2u);
    EXPECT_GE(r.large.points, 2u);
    EXPECT_GT(r.c_lower, 0.0);
    EXPECT_LT(r.c_upper, std::numeric_limits<double>::infinity());
    // every evaluated candidate satisfies m <= C P^a V^b with the fitted constant
    for (const auto& rec : r.records)
        for (const auto& c : rec.candidates)
            EXPECT_LE(interpolation_ratio(c.energy.m, c.energy.P, c.energy.V, kCoulomb), r.interpolation_constant);
}

TEST(Scaling, GridCandidatesJoinTheirMass) {
    const double h = 1.0 / 10;
    SweepRecord extra;
    extra.m = 2.0;
    extra.h = h;
    extra.kernel = kCoulomb;
    extra.candidates.push_back({"grid_chain", chain_energy(kCoulomb, 2.0, h)});
    const ScalingReport r = scaling_sweep(kCoulomb, {0.5, 1.0, 2.0, 4.0}, {extra});
    const auto it = std::find_if(r.records.begin(), r.records.end(), [](const SweepRecord& s) { return s.m == 2.0; });
    ASSERT_NE(it, r.records.end());
    EXPECT_EQ(it->candidates.size() > 1, true);
    const Candidate& best = it->best_candidate();
    for (const auto& c : it->candidates) EXPECT_LE(best.energy.E, c.energy.E);
}

TEST(Equipartition, ChainsHaveStableLowerBound) {
    const auto cands = chain_candidates(kCoulomb, {2.0, 4.0, 8.0, 16.0});
    const double beta = 2.0 * BallOracle(kCoulomb).energy(1.0);
    const EquipartitionReport r = equipartition_check(cands, beta);
    EXPECT_GT(r.c_fit, 0.0);
    EXPECT_LE(r.spread, 0.3);
    EXPECT_EQ(r.upper_violations, 0u);
}

TEST(Equipartition, HugeBallViolatesLinearEnergy) {
    const EnergyBreakdown ball = ball_energy(3, 1.0, 100.0);
    EXPECT_LDLAB_ERROR(equipartition_check({ball}, 10.0), ErrorCode::PreconditionFailed);
}

TEST(Equipartition, UnitBallWithinBounds) {
    const BallOracle o(kCoulomb);
    const EquipartitionReport r = equipartition_check({o.breakdown(1.0)}, 2.0 * o.energy(1.0));
    EXPECT_EQ(r.upper_violations, 0u);
    EXPECT_NEAR(r.c_fit, std::min(o.perimeter(1.0), o.nonlocal(1.0)), 1e-12);
}

TEST(Diameter, BallAndChainSamples) {
    std::vector<DiameterSample> samples;
    for (double m : {1.0, 2.0, 4.0}) samples.push_back(diameter_sample("ball", make_ball(3, m, 0.1), kCoulomb));
    for (double m : {2.0, 4.0, 8.0, 16.0}) samples.push_back(chain_diameter_sample(kCoulomb, m));
    const DiameterReport r = diameter_bounds_check(samples, kCoulomb);
    EXPECT_GT(r.c_lower, 0.0);
    EXPECT_LT(r.c_upper, std::numeric_limits<double>::infinity());
    EXPECT_TRUE(r.energy_violations.empty());
    for (const auto& s : samples) EXPECT_GE(s.V, s.m * s.m / std::pow(s.diameter, kCoulomb.alpha));
}

TEST(Diameter, ChainGrowsLinearly) {
    const double d4 = chain_diameter_sample(kCoulomb, 4.0).diameter;
    const double d8 = chain_diameter_sample(kCoulomb, 8.0).diameter;
    const double d16 = chain_diameter_sample(kCoulomb, 16.0).diameter;
    EXPECT_NEAR((d16 - d8) / (d8 - d4), 2.0, 0.1);
}

TEST(Diameter, BallDiameterFormula) {
    const double h = 0.1;
    const DiameterSample s = diameter_sample("ball", make_ball(3, 3.0, h), kCoulomb);
    EXPECT_NEAR(s.diameter, 2.0 * ball_radius(3, 3.0), 2.0 * h);
}

TEST(Density, UnitBallBoundaryMatchesLens) {
    const double h = 1.0 / 16;
    const GridSet b = make_ball(3, unit_ball_volume(3), h);
    const DensityReport r = density_bound_check(b);
    EXPECT_GT(r.samples, 0u);
    // |B_1(x) ∩ B_1| for |x| = 1; the half-ball value is only reached for large radii
    EXPECT_LT(rel_err(r.min_mass, oracle::lens_volume(1.0, 1.0)), 0.03);
    EXPECT_NEAR(r.min_mass, local_mass(b, r.location), 1e-12);
    EXPECT_FALSE(r.flagged);
}

TEST(Density, LargeBallApproachesHalfBall) {
    const double h = 1.0 / 8;
    const double R = 3.0;
    const GridSet b = make_ball(3, unit_ball_volume(3) * R * R * R, h);
    const DensityReport r = density_bound_check(b);
    EXPECT_LT(rel_err(r.min_mass, oracle::lens_volume(R, 1.0, R)), 0.04);
    EXPECT_GT(r.min_mass, oracle::lens_volume(1.0, 1.0));
    EXPECT_LT(r.min_mass, unit_ball_volume(3) / 2.0);
}

TEST(Density, FilamentIsFlagged) {
    const double h = 1.0 / 10;
    GridSet b = make_ball(3, 1.0, h).padded(Index{0, 0, 0}, Index{40, 0, 0});
    const BoundingBox box = bounding_box(b);
    const int y = (box.lo[1] + box.hi[1]) / 2, z = (box.lo[2] + box.hi[2]) / 2;
    for (int x = box.hi[0] + 1; x <= box.hi[0] + 30; ++x) b.set(Index{x, y, z}, true);
    const DensityReport r = density_bound_check(b);
    EXPECT_TRUE(r.flagged);
    EXPECT_NEAR(r.min_mass, local_mass(b, r.location), 1e-12);
}

TEST(Density, EmptySetReportsNothing) {
    const DensityReport r = density_bound_check(GridSet(3, Index{6, 6, 6}, 0.1));
    EXPECT_EQ(r.samples, 0u);
}

TEST(CutProbe, LargeBallHasProfitableSplit) {
    const CutReport r = cut_inequality_probe(make_ball(3, 4.0, 1.0 / 8), kCoulomb);
    EXPECT_TRUE(r.any_profitable);
    EXPECT_GT(r.best_gain, 0.0);
    EXPECT_TRUE(r.U_monotone);
    EXPECT_NEAR(r.U_total, r.m, 1e-12);
    for (const auto& row : r.rows) EXPECT_NEAR(row.far_field_ratio, 2.0, 0.1);
}

TEST(CutProbe, SmallBallHasNone) {
    const CutReport r = cut_inequality_probe(make_ball(3, 0.5, 1.0 / 16), kCoulomb);
    EXPECT_FALSE(r.any_profitable);
    EXPECT_TRUE(r.U_monotone);
    EXPECT_NEAR(r.U_total, r.m, 1e-12);
    EXPECT_EQ(r.inequality_failures, 0u);
}

TEST(CutProbe, Deterministic) {
    const GridSet s = random_union(3, 2.0, 0.125, 3);
    const CutReport a = cut_inequality_probe(s, kCoulomb);
    const CutReport b = cut_inequality_probe(s, kCoulomb);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].split_energy, b.rows[i].split_energy);
}

TEST(CutProbe, EmptyThrows) {
    EXPECT_LDLAB_ERROR(cut_inequality_probe(GridSet(3, Index{6, 6, 6}, 0.1), kCoulomb), ErrorCode::EmptySet);
}

TEST(Interpolation, SmallScanHasNoCounterexample) {
    const InterpolationScan s = interpolation_scan(kCoulomb, {0.1, 1.0, 10.0}, 16.0, 10, 1.0, 1.0 / 12, 1);
    EXPECT_LE(s.ball_spread, 0.02);
    EXPECT_EQ(s.random_ratios.size(), 10u);
    EXPECT_EQ(s.counterexamples, 0u);
    EXPECT_LE(s.random_max, s.constant);
}
