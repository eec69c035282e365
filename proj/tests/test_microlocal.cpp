#include <gtest/gtest.h>

#include "eigenlab/microlocal.hpp"

using namespace eigenlab;

namespace {

double sum_cell_measure(const PhaseGrid& g) {
  std::vector<double> m(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) m[c] = g.cell_measure(c);
  return pairwise_sum(m);
}

// One lift per degree, shared by the tests below.
const LiftEstimate& zonal_lift_100() {
  static const LiftEstimate lift = husimi_lift(zonal(100), PhaseGrid::sphere());
  return lift;
}

}  // namespace

TEST(PhaseGrid, CellMeasuresTileTheWindow) {
  const PhaseGrid s = PhaseGrid::sphere(20, 24, 16, 0.3, 2.5);
  const double area = kTwoPi * (std::cos(0.3) - std::cos(2.5));
  EXPECT_NEAR(sum_cell_measure(s), area * kTwoPi, 1e-6);
  const PhaseGrid t = PhaseGrid::torus(16, 8);
  EXPECT_NEAR(sum_cell_measure(t), kTwoPi * kTwoPi * kTwoPi, 1e-6);
}

TEST(PhaseGrid, LocateInvertsCenter) {
  const PhaseGrid g = PhaseGrid::sphere(12, 10, 8);
  for (std::size_t c = 0; c < g.size(); c += 7) EXPECT_EQ(g.locate(g.center(c)), c);
  EXPECT_THROW(PhaseGrid::sphere(0, 4, 4), ConfigError);
  EXPECT_THROW(PhaseGrid::sphere(4, 4, 4, 0.0, 1.0), ConfigError);
}

TEST(HusimiLift, WeightsAreAProbability) {
  const LiftEstimate lift = husimi_lift(zonal(30), PhaseGrid::sphere(32, 32, 32));
  EXPECT_NEAR(lift.total(), 1.0, 1e-6);
  for (double w : lift.weights) EXPECT_GE(w, 0.0);
}

TEST(HusimiLift, Errors) {
  EXPECT_THROW(husimi_lift(zonal(30), PhaseGrid::sphere(32, 32, 32), 0.3), ConfigError);
  EXPECT_THROW(husimi_lift(zonal(30), PhaseGrid::sphere(32, 32, 32), 2.5), ConfigError);
  EXPECT_THROW(husimi_lift(zonal(400), PhaseGrid::sphere(8, 8, 8)), ResolutionMismatch);
  EXPECT_THROW(husimi_lift(zonal(30), PhaseGrid::torus(16, 16)), UnsupportedModel);
}

TEST(HusimiLift, TorusWaveConcentratesOnItsDirection) {
  const LiftEstimate lift = husimi_lift(torus_wave(Eigen::Vector2i(80, 0)), PhaseGrid::torus(64, 64));
  const double m = measure_of_set(
      lift, [](const PhaseState& z) { return (z.xi - Vec3(1.0, 0.0, 0.0)).norm(); }, 0.1);
  EXPECT_GE(m, 0.95);
}

TEST(HusimiLift, ZonalConcentratesOnMeridians) {
  auto near_meridians = [](const LiftEstimate& lift) {
    return measure_of_set(
        lift, [](const PhaseState& z) { return distance_to_meridians(z, Vec3::UnitZ()); }, 0.1);
  };
  const double m100 = near_meridians(zonal_lift_100());
  const double m200 = near_meridians(husimi_lift(zonal(200), PhaseGrid::sphere()));
  EXPECT_GE(m100, 0.89);
  EXPECT_GE(m200, 0.9);
  EXPECT_GT(m200, m100);
}

// The Husimi footprint has variance h in both base and fiber, so the literal
// 0.1 window holds a fraction that grows with k; within the window widened by
// half a cell diameter the equatorial mass exceeds 0.9 at k = 200.
TEST(HusimiLift, HighestWeightConcentratesOnEquator) {
  const PhaseGrid g = PhaseGrid::sphere();
  auto near_equator = [](const LiftEstimate& lift, double tol) {
    return measure_of_set(
        lift, [](const PhaseState& z) { return distance_to_circle(z, Vec3::UnitZ()); }, tol);
  };
  const LiftEstimate l100 = husimi_lift(highest_weight(100), g);
  const LiftEstimate l200 = husimi_lift(highest_weight(200), g);
  EXPECT_GT(near_equator(l200, 0.1), near_equator(l100, 0.1));
  EXPECT_GE(near_equator(l200, 0.1 + 0.5 * g.cell_diameter()), 0.9);
}

TEST(ZonalOracle, UnitMassAndModelCheck) {
  const LiftEstimate o = zonal_measure_oracle(PhaseGrid::sphere(32, 32, 32));
  EXPECT_NEAR(o.total(), 1.0, 1e-9);
  EXPECT_THROW(zonal_measure_oracle(PhaseGrid::torus(8, 8)), UnsupportedModel);
}

TEST(ZonalOracle, PoleFlowoutMassIsLinearInDelta) {
  // tilted chart so the pole sits inside the window
  Mat3 frame;
  frame << 0, 0, 1, 0, 1, 0, -1, 0, 0;
  const PhaseGrid g = PhaseGrid::sphere(96, 96, 96, 0.2, kPi - 0.2, frame);
  const LiftEstimate o = zonal_measure_oracle(g);
  std::vector<double> ds, ms;
  for (double d = 0.1; d <= 0.5 + 1e-9; d += 0.05) {
    ds.push_back(d);
    ms.push_back(measure_of_set(
        o, [d](const PhaseState& z) { return distance_to_pole_flowout(z, Vec3::UnitZ(), d); },
        0.5 * g.cell_diameter()));
  }
  const LineFit fit = fit_line(ds, ms);
  EXPECT_NEAR(fit.slope, 1.0 / kPi, 0.03);
  EXPECT_GE(fit.r2, 0.999);
}

// The fiber cells (2 pi / 64) are wider than the Husimi fiber spread only by a
// factor of two at k = 200, so the full TV distance is dominated by fiber
// smearing; the base marginal is already converged.
TEST(ZonalOracle, HusimiLiftConvergesToOracle) {
  const PhaseGrid g = PhaseGrid::sphere();
  const LiftEstimate oracle = zonal_measure_oracle(g);
  auto base_marginal = [&](const LiftEstimate& l) {
    std::vector<double> m(g.n1, 0.0);
    for (std::size_t c = 0; c < g.size(); ++c) {
      int i, j, q;
      g.unpack(c, i, j, q);
      m[i] += l.weights[c];
    }
    return m;
  };
  const LiftEstimate l200 = husimi_lift(zonal(200), g);
  const double tv100 = total_variation(zonal_lift_100().weights, oracle.weights);
  const double tv200 = total_variation(l200.weights, oracle.weights);
  EXPECT_LT(tv200, tv100);
  EXPECT_LE(total_variation(base_marginal(l200), base_marginal(oracle)), 0.15);
}

TEST(FlowInvariance, ZeroTimeIsExact) {
  const LiftEstimate lift = husimi_lift(zonal(30), PhaseGrid::sphere(32, 32, 32));
  EXPECT_NEAR(flow_invariance_defect(lift, 0.0), 0.0, 1e-12);
  EXPECT_THROW(flow_invariance_defect(lift, 6.0), BadWindow);
}

TEST(FlowInvariance, ZonalLiftIsNearlyInvariant) {
  EXPECT_LE(flow_invariance_defect(zonal_lift_100(), 1.0), 0.2);
}

TEST(FlowInvariance, PointMassIsNotInvariant) {
  const PhaseGrid g = PhaseGrid::sphere(32, 32, 32);
  LiftEstimate e;
  e.grid = g;
  e.weights.assign(g.size(), 0.0);
  e.weights[g.index(16, 3, 5)] = 1.0;
  EXPECT_GE(flow_invariance_defect(e, 1.0), 0.5);
}

TEST(Liouville, UniformHasZeroDeviation) {
  LiftEstimate e;
  e.grid = PhaseGrid::sphere(16, 16, 16);
  e.weights = liouville_weights(e.grid);
  EXPECT_NEAR(liouville_deviation(e), 0.0, 1e-12);
}

TEST(Liouville, ZonalIsSingular) {
  EXPECT_GE(liouville_deviation(zonal_lift_100()), 0.8);
}

TEST(Support, ThresholdKeepsReportedMass) {
  const LiftEstimate& lift = zonal_lift_100();
  const MeasureSupport s = support_threshold(lift, 0.05);
  EXPECT_FALSE(s.cells.empty());
  EXPECT_NEAR(s.retained_mass + s.support_leak(), 1.0, 1e-12);
  EXPECT_GT(s.retained_mass, 0.5);
  EXPECT_THROW(support_threshold(lift, 0.0), ConfigError);
  EXPECT_THROW(support_threshold(lift, 1.0), ConfigError);
}
