#include <gtest/gtest.h>

#include "eigenlab/bounds.hpp"

using namespace eigenlab;

namespace {

std::vector<ScalingSample> synthetic(const std::vector<double>& lambdas, double c, double a) {
  std::vector<ScalingSample> s;
  for (double l : lambdas) {
    ScalingSample x;
    x.lambda = l;
    x.sup_value = c * std::pow(l, a);
    s.push_back(x);
  }
  return s;
}

ScalingFit ladder_fit(Eigenfunction (*make)(int)) {
  std::vector<ScalingSample> s;
  for (int k : {25, 50, 100, 200, 400}) s.push_back(sup_norm(make(k)));
  return fit_growth(s);
}

ScalingFit fit_with_exponent(double a) {
  ScalingFit f;
  f.exponent = a;
  return f;
}

}  // namespace

TEST(SupNorm, TorusWaveIsConstant) {
  const ScalingSample s = sup_norm(torus_wave(Eigen::Vector2i(12, 5)));
  EXPECT_NEAR(s.sup_value, 1.0 / kTwoPi, 1e-12);
}

TEST(SupNorm, ZonalPoleValue) {
  const ScalingSample s = sup_norm(zonal(100));
  EXPECT_NEAR(s.sup_value, std::sqrt(201.0 / (4.0 * kPi)), 1e-8);
  EXPECT_NEAR(s.sup_value, eval_zonal_legendre(100, 0.0), 1e-8);
  EXPECT_NEAR(s.sup_value, 3.999383925148, 1e-9);
}

TEST(SupNorm, HighestWeightPeaksOnEquator) {
  const ScalingSample s = sup_norm(highest_weight(100));
  EXPECT_NEAR(s.argmax.x(), kPi / 2, 1e-4);
  EXPECT_NEAR(s.sup_value, highest_weight_constant(100), 1e-10);
}

TEST(SupNorm, RefinementDominatesCoarseGrid) {
  const Eigenfunction u = random_wave(40, 2);
  const EvalGrid g = default_sup_grid(u);
  double coarse = 0.0;
  for (std::size_t i = 0; i < g.rows(); i += 3)
    for (std::size_t j = 0; j < g.cols(); j += 3) coarse = std::max(coarse, std::abs(evaluate(u, g.node(i, j))));
  const ScalingSample s = sup_norm(u, g);
  EXPECT_GE(s.sup_value, coarse);
  const double cell = std::max(g.axis1[1] - g.axis1[0], g.axis2[1] - g.axis2[0]);
  EXPECT_LE(s.sup_value - coarse, u.lambda * 3.0 * cell * s.sup_value);
}

TEST(SupNorm, CoarseGridIsRejected) {
  const Eigenfunction u = zonal(100);
  EXPECT_THROW(sup_norm(u, EvalGrid::sphere_latlon(64, 64)), Underresolved);
  EXPECT_THROW(sup_norm(torus_wave(Eigen::Vector2i(50, 0)), EvalGrid::torus(64)), Underresolved);
}

TEST(FitGrowth, ExactOnPowerLaw) {
  const ScalingFit f = fit_growth(synthetic({10, 20, 40, 80, 160}, 0.7, 0.37));
  EXPECT_NEAR(f.exponent, 0.37, 1e-10);
  EXPECT_NEAR(f.constant, 0.7, 1e-10);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_EQ(f.samples, 5u);
  EXPECT_DOUBLE_EQ(f.lambda_min, 10.0);
  EXPECT_DOUBLE_EQ(f.lambda_max, 160.0);
}

TEST(FitGrowth, Errors) {
  EXPECT_THROW(fit_growth(synthetic({10, 20, 40, 80}, 1, 0.5)), InsufficientSamples);
  EXPECT_THROW(fit_growth(synthetic({10, 12, 14, 16, 39}, 1, 0.5)), InsufficientSamples);
  EXPECT_THROW(fit_growth(synthetic({10, 20, 40, 80, 160}, 0.0, 0.5)), InsufficientSamples);
}

TEST(FitGrowth, AnalyticFamilies) {
  EXPECT_NEAR(ladder_fit(zonal).exponent, 0.5, 0.03);
  EXPECT_NEAR(ladder_fit(highest_weight).exponent, 0.25, 0.05);
  std::vector<ScalingSample> t;
  for (int k : {25, 50, 100, 200, 400}) t.push_back(sup_norm(torus_wave(Eigen::Vector2i(k, 0))));
  EXPECT_NEAR(fit_growth(t).exponent, 0.0, 0.02);
}

TEST(Sogge, TorusClosedForm) {
  const double delta = 0.3;
  const Eigenfunction u = torus_wave(Eigen::Vector2i(40, 0));
  const BoundReport r = check_sogge_local(u, Vec2(1.0, 2.0), delta);
  const double ball = std::sqrt(kPi * delta * delta) / kTwoPi;
  EXPECT_NEAR(r.params.at("ball_l2"), ball, 1e-8);
  EXPECT_NEAR(r.params.at("ball_l2_at_x"), ball, 1e-8);
  EXPECT_NEAR(r.lhs, 1.0 / kTwoPi, 1e-12);
  EXPECT_NEAR(r.ratio, 1.0 / std::sqrt(u.lambda * kPi * delta), 1e-7);
  EXPECT_GE(r.lhs, 0.0);
  EXPECT_GE(r.rhs, 0.0);
}

TEST(Sogge, ZonalRatioHasNoGrowth) {
  std::vector<double> lx, ly;
  for (int k : {50, 100, 200}) {
    const BoundReport r = check_sogge_local(zonal(k), Vec2(0.0, 0.0), 0.3);
    lx.push_back(std::log(static_cast<double>(k)));
    ly.push_back(std::log(r.ratio));
  }
  EXPECT_LE(fit_line(lx, ly).slope, 0.05);
}

TEST(Sogge, RandomWaveBallMassIsNearlyUniform) {
  const double delta = 0.3;
  const Eigenfunction u = random_wave(100, 17);
  const double expect = 2.0 * kPi * (1.0 - std::cos(delta)) / (4.0 * kPi);
  for (const Vec2& x : {Vec2(0.7, 0.3), Vec2(1.6, 2.0), Vec2(2.4, 4.4)}) {
    const double m = check_sogge_local(u, x, delta, 8).params.at("ball_l2_at_x");
    EXPECT_NEAR(m * m / expect, 1.0, 0.3);
  }
}

TEST(Sogge, Errors) {
  EXPECT_THROW(check_sogge_local(zonal(50), Vec2(1.0, 0.0), 0.01), BadWindow);
  EXPECT_THROW(check_sogge_local(zonal(50), Vec2(1.0, 0.0), 1.7), BadWindow);
  EXPECT_NO_THROW(check_sogge_local(torus_wave(Eigen::Vector2i(5, 0)), Vec2(1.0, 0.0), 3.0, 4));
  EXPECT_THROW(check_sogge_local(oscillator_family(0, 0, 0.1), Vec2(0.0, 0.0), 0.3), UnsupportedModel);
}

TEST(Related, LhsDependsOnModulusOnly) {
  const Eigenfunction u = random_wave(60, 4);
  const Vec3 x = embed_base(u.model(), Vec2(1.1, 0.2));
  const double rho = 1.0 / std::sqrt(u.lambda);
  EXPECT_DOUBLE_EQ(sup_on_ball(u, x, rho), sup_on_ball(u.scaled(-1.0), x, rho));
}

TEST(Related, ZonalPoleWindowSeesThePeak) {
  for (int k : {100, 200}) {
    const Eigenfunction u = zonal(k);
    const double lhs = std::sqrt(u.h) * sup_on_ball(u, Vec3::UnitZ(), 1.0 / std::sqrt(u.lambda));
    EXPECT_NEAR(lhs, std::sqrt((2.0 * k + 1) / (4.0 * kPi * k)), 1e-9);
    EXPECT_GE(lhs, 0.35);
    EXPECT_LE(lhs, 0.45);
  }
}

TEST(Related, TorusFamily) {
  std::vector<Eigenfunction> fam;
  for (int k : {20, 40, 80}) fam.push_back(torus_wave(Eigen::Vector2i(k, 0)));
  CoverParams cp;
  cp.ndirs = 1024;
  cp.ntimes = 256;
  const RelatedReport r = check_related(fam, Vec2(2.0, 3.0), 0.3, {}, cp);
  for (std::size_t i = 0; i < fam.size(); ++i)
    EXPECT_NEAR(r.lhs[i], std::sqrt(fam[i].h) / kTwoPi, 1e-10);
  EXPECT_TRUE(r.lhs_decreasing);
  EXPECT_NEAR(r.lhs_slope, -0.5, 1e-9);
  EXPECT_EQ(r.verdict, Admissibility::Admissible);
  EXPECT_LT(r.rhs, std::sqrt(r.proxy_cutoff));
  for (std::size_t i = 0; i < fam.size(); ++i) EXPECT_DOUBLE_EQ(r.ratios[i], r.lhs[i] / std::max(r.rhs, kRatioFloor));
}

TEST(Related, Errors) {
  const std::vector<Eigenfunction> two{zonal(10), zonal(20)};
  EXPECT_THROW(check_related(two, Vec2(1.0, 0.0), 0.3), InsufficientSamples);
  const std::vector<Eigenfunction> three{zonal(10), zonal(20), zonal(40)};
  EXPECT_THROW(check_related(three, Vec2(1.0, 0.0), 0.05), BadWindow);
  EXPECT_THROW(check_related(three, Vec2(1.0, 0.0), 0.6), BadWindow);
  const std::vector<Eigenfunction> unsorted{zonal(20), zonal(10), zonal(40)};
  EXPECT_THROW(check_related(unsorted, Vec2(1.0, 0.0), 0.3), ConfigError);
}

TEST(TheoremVerdict, Examples) {
  using A = Admissibility;
  const auto hw = theorem_verdict("highest-weight", fit_with_exponent(0.25), {A::Admissible}, "Theorem 1");
  EXPECT_FALSE(hw.violation);
  EXPECT_EQ(hw.summary(), "CONSISTENT");
  const auto zon = theorem_verdict("zonal", fit_with_exponent(0.5), {A::NotAdmissible, A::Admissible});
  EXPECT_FALSE(zon.violation);
  EXPECT_TRUE(zon.any_not_admissible);
  const auto rnd = theorem_verdict("random-wave", fit_with_exponent(0.2), {A::Admissible}, "Theorem 2");
  EXPECT_FALSE(rnd.violation);
  const auto bad = theorem_verdict("synthetic", fit_with_exponent(0.46), {A::Admissible, A::Admissible});
  EXPECT_TRUE(bad.violation);
  EXPECT_EQ(bad.summary(), "VIOLATION");
  EXPECT_FALSE(theorem_verdict("synthetic", fit_with_exponent(0.46), {}).violation);
}
