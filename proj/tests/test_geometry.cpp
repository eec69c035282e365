#include <gtest/gtest.h>

#include <random>

#include "eigenlab/geometry.hpp"

using namespace eigenlab;

namespace {

const ManifoldModel kSphere = ManifoldModel::round_sphere();
const ManifoldModel kTorus = ManifoldModel::flat_torus();

// Unit-speed chart samples away from the chart poles.
std::vector<PhasePoint> sphere_samples(int n, unsigned seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> r(0.3, kPi - 0.3), a(0.0, kTwoPi);
  std::vector<PhasePoint> out;
  for (int i = 0; i < n; ++i) {
    const double rr = r(rng), th = a(rng), psi = a(rng);
    out.push_back({Vec2(rr, th), Vec2(std::cos(psi), std::sin(rr) * std::sin(psi))});
  }
  return out;
}

}  // namespace

TEST(Metric, SphereEquatorIsIdentity) {
  const Mat2 g = metric_inverse_at(kSphere, Vec2(kPi / 2, 0.0));
  EXPECT_NEAR(g(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(g(1, 1), 1.0, 1e-15);
  EXPECT_EQ(g(0, 1), 0.0);
}

TEST(Metric, SpherePiOverThree) {
  const Mat2 g = metric_inverse_at(kSphere, Vec2(kPi / 3, 1.0));
  EXPECT_NEAR(g(1, 1), 4.0 / 3.0, 1e-14);
}

TEST(Metric, TorusIsFlat) {
  const Mat2 g = metric_inverse_at(kTorus, Vec2(1.0, 5.0));
  EXPECT_TRUE(g.isApprox(Mat2::Identity()));
}

TEST(Metric, ChartMarginViolation) {
  EXPECT_THROW(metric_inverse_at(kSphere, Vec2(5e-4, 0.0)), ChartViolation);
  EXPECT_THROW(metric_inverse_at(kSphere, Vec2(kPi - 5e-4, 0.0)), ChartViolation);
  EXPECT_THROW(metric_inverse_at(kSphere, Vec2(std::nan(""), 0.0)), ChartViolation);
}

TEST(Hamiltonian, Examples) {
  EXPECT_NEAR(hamiltonian(kSphere, {Vec2(kPi / 2, 0), Vec2(1, 0)}), 0.5, 1e-15);
  EXPECT_NEAR(hamiltonian(kTorus, {Vec2(0, 0), Vec2(3, 4)}), 12.5, 1e-15);
  EXPECT_NEAR(hamiltonian(kSphere, {Vec2(kPi / 3, 0), Vec2(0, std::sin(kPi / 3))}), 0.5, 1e-15);
}

TEST(GeodesicFlow, SpherePeriodTwoPi) {
  for (const auto& z : sphere_samples(20)) {
    const PhaseState s = to_state(kSphere, z);
    const PhaseState e = flow_state(kSphere, s, kTwoPi, 1e-9);
    EXPECT_LE(sasaki_distance(kSphere, e, s), 1e-6);
  }
}

TEST(GeodesicFlow, TorusStraightLine) {
  const PhasePoint z{Vec2(1.0, 2.0), Vec2(1.0, 0.0)};
  const PhasePoint e = geodesic_flow(kTorus, z, 7.0, 1e-10);
  EXPECT_NEAR(e.x.x(), wrap_angle(8.0), 1e-12);
  EXPECT_NEAR(e.x.y(), 2.0, 1e-12);
  EXPECT_NEAR(e.xi.x(), 1.0, 1e-15);
}

TEST(GeodesicFlow, EquatorQuarterCircleMatchesClosedForm) {
  const PhasePoint z{Vec2(kPi / 2, 0.0), Vec2(0.0, 1.0)};
  const PhasePoint a = geodesic_flow(kSphere, z, kPi / 2, 1e-10);
  const PhasePoint b = geodesic_flow_closed_form(kSphere, z, kPi / 2);
  EXPECT_NEAR(a.x.x(), kPi / 2, 1e-8);
  EXPECT_NEAR(a.x.y(), kPi / 2, 1e-8);
  EXPECT_LE((a.x - b.x).norm() + (a.xi - b.xi).norm(), 1e-8);
}

TEST(GeodesicFlow, IntegratorAgreesWithOracleOn100Samples) {
  const double tol = 1e-9;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(-10.0, 10.0);
  for (const auto& z : sphere_samples(100)) {
    const PhaseState s = to_state(kSphere, z);
    const double tt = t(rng);
    const PhaseState a = flow_state(kSphere, s, tt, tol);
    const PhaseState b = flow_closed_form(kSphere, s, tt);
    EXPECT_LE(sasaki_distance(kSphere, a, b), 10 * tol);
    EXPECT_LE(std::abs(state_hamiltonian(a) - 0.5), tol);
  }
}

TEST(GeodesicFlow, GroupProperty) {
  const double tol = 1e-9;
  for (const auto& z : sphere_samples(20, 11)) {
    const PhaseState s = to_state(kSphere, z);
    const PhaseState ab = flow_state(kSphere, flow_state(kSphere, s, 1.3, tol), -2.9, tol);
    const PhaseState direct = flow_state(kSphere, s, -1.6, tol);
    EXPECT_LE(sasaki_distance(kSphere, ab, direct), 10 * tol);
  }
}

TEST(GeodesicFlow, TrajectoryThroughPoleIsFine) {
  const PhaseState s = to_state(kSphere, {Vec2(0.5, 0.0), Vec2(-1.0, 0.0)});  // heads over the pole
  const PhaseState a = flow_state(kSphere, s, 1.0, 1e-10);
  const PhaseState b = flow_closed_form(kSphere, s, 1.0);
  EXPECT_LE(sasaki_distance(kSphere, a, b), 1e-8);
}

TEST(GeodesicFlow, Errors) {
  EXPECT_THROW(geodesic_flow(kSphere, {Vec2(1, 0), Vec2(0, 0)}, 1.0, 1e-9), NoConvergence);
  EXPECT_THROW(geodesic_flow(kSphere, {Vec2(1, 0), Vec2(1, 0)}, 1.0, 0.0), NoConvergence);
  // end point exactly at the chart pole
  EXPECT_THROW(geodesic_flow(kSphere, {Vec2(0.5, 0), Vec2(-1, 0)}, 0.5, 1e-10), ChartViolation);
}

TEST(Clairaut, Examples) {
  EXPECT_EQ(clairaut(kSphere, PhasePoint{Vec2(1.0, 0.3), Vec2(1.0, 0.0)}), 0.0);
  EXPECT_EQ(clairaut(kSphere, PhasePoint{Vec2(kPi / 2, 0.3), Vec2(0.0, 1.0)}), 1.0);
  EXPECT_THROW(clairaut(kTorus, PhasePoint{Vec2(1, 1), Vec2(1, 0)}), UnsupportedModel);
}

TEST(Clairaut, ConservedAlongIntegratedFlow) {
  for (const auto& z : sphere_samples(20, 5)) {
    const PhaseState s = to_state(kSphere, z);
    const double c0 = clairaut(kSphere, s);
    EXPECT_NEAR(c0, z.xi.y(), 1e-14);
    for (double t = 0.5; t <= 10.0; t += 0.5) EXPECT_NEAR(clairaut(kSphere, flow_state(kSphere, s, t, 1e-10)), c0, 1e-8);
  }
}

TEST(Distance, Examples) {
  EXPECT_EQ(geodesic_distance(kSphere, Vec2(1, 1), Vec2(1, 1)), 0.0);
  // the pole e3 is chart-valid in a chart about e1; distance to the equator point e2 is pi/2
  const ManifoldModel tilted = ManifoldModel::round_sphere_with_pole(Vec3(1, 0, 0));
  const Vec2 p = sphere_chart_of(tilted, Vec3::UnitZ());
  const Vec2 q = sphere_chart_of(tilted, Vec3::UnitY());
  EXPECT_NEAR(geodesic_distance(tilted, p, q), kPi / 2, 1e-12);
  EXPECT_NEAR(geodesic_distance(kTorus, Vec2(0, 0), Vec2(kTwoPi - 0.1, 0)), 0.1, 1e-12);
}

TEST(Distance, TriangleInequalityOnSamples) {
  const auto zs = sphere_samples(30, 9);
  for (std::size_t i = 0; i + 2 < zs.size(); ++i) {
    const double ab = geodesic_distance(kSphere, zs[i].x, zs[i + 1].x);
    const double bc = geodesic_distance(kSphere, zs[i + 1].x, zs[i + 2].x);
    const double ac = geodesic_distance(kSphere, zs[i].x, zs[i + 2].x);
    EXPECT_LE(ac, ab + bc + 1e-12);
    EXPECT_NEAR(ab, geodesic_distance(kSphere, zs[i + 1].x, zs[i].x), 1e-14);
  }
}

TEST(Sasaki, Examples) {
  const PhasePoint a{Vec2(1, 1), Vec2(1, 0)}, b{Vec2(1, 1), Vec2(-1, 0)};
  EXPECT_EQ(sasaki_distance(kTorus, a, a), 0.0);
  EXPECT_NEAR(sasaki_distance(kTorus, a, b), 2.0, 1e-15);
  // two fiber points over the pole are apart although their bases coincide
  const PhaseState p1 = unit_state(kSphere, Vec3::UnitZ(), 0.0), p2 = unit_state(kSphere, Vec3::UnitZ(), kPi / 2);
  EXPECT_NEAR(sasaki_distance(kSphere, p1, p2), std::sqrt(2.0), 1e-14);
  EXPECT_THROW(sasaki_distance(kTorus, a, PhasePoint{Vec2(1, 1), Vec2(2, 0)}), ShellViolation);
}

TEST(Embedding, BoxEmbeddingIsOneLipschitz) {
  const auto zs = sphere_samples(40, 13);
  for (std::size_t i = 0; i + 1 < zs.size(); ++i) {
    const PhaseState a = to_state(kSphere, zs[i]), b = to_state(kSphere, zs[i + 1]);
    const Embedded6 ea = box_embedding(kSphere, a), eb = box_embedding(kSphere, b);
    double d2 = 0;
    for (int k = 0; k < 6; ++k) d2 += (ea[k] - eb[k]) * (ea[k] - eb[k]);
    EXPECT_LE(std::sqrt(d2), phase_distance(kSphere, a, b) + 1e-12);
  }
}

TEST(Charts, RoundTrip) {
  for (const auto& z : sphere_samples(20, 17)) {
    const PhasePoint back = to_chart(kSphere, to_state(kSphere, z));
    EXPECT_NEAR(back.x.x(), z.x.x(), 1e-13);
    EXPECT_NEAR(std::remainder(back.x.y() - z.x.y(), kTwoPi), 0.0, 1e-13);
    EXPECT_NEAR((back.xi - z.xi).norm(), 0.0, 1e-13);
  }
}
