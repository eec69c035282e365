#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>

#include "eigenlab/common.hpp"

using namespace eigenlab;

TEST(PairwiseSum, MatchesExactSmallIntegers) {
  std::vector<double> xs(1000);
  for (int i = 0; i < 1000; ++i) xs[i] = i + 1;
  EXPECT_EQ(pairwise_sum(xs), 500500.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(PairwiseSum, BeatsNaiveOnCancellation) {
  std::vector<double> xs(1 << 20, 0.1);
  const double exact = 0.1 * (1 << 20);
  EXPECT_NEAR(pairwise_sum(xs), exact, 1e-9);
}

TEST(FitLine, ExactOnSyntheticPowerLaw) {
  std::vector<double> lx, ly;
  for (double k : {25.0, 50.0, 100.0, 200.0, 400.0}) {
    lx.push_back(std::log(k));
    ly.push_back(std::log(3.0 * std::pow(k, 0.37)));
  }
  const LineFit f = fit_line(lx, ly);
  EXPECT_NEAR(f.slope, 0.37, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(FitLine, DegenerateInputs) {
  const std::vector<double> one{1.0};
  EXPECT_EQ(fit_line(one, one).slope, 0.0);
  const std::vector<double> same{2.0, 2.0, 2.0}, y{1.0, 2.0, 3.0};
  EXPECT_EQ(fit_line(same, y).r2, 0.0);
}

TEST(WrapAngle, IntoZeroTwoPi) {
  EXPECT_NEAR(wrap_angle(-0.5), kTwoPi - 0.5, 1e-15);
  EXPECT_NEAR(wrap_angle(7.0), 7.0 - kTwoPi, 1e-15);
  EXPECT_EQ(wrap_angle(0.0), 0.0);
}

TEST(AnyOrthonormal, IsUnitAndOrthogonal) {
  for (const Vec3& n : {Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(1, 2, 3).normalized()}) {
    const Vec3 e = any_orthonormal(n);
    EXPECT_NEAR(e.norm(), 1.0, 1e-15);
    EXPECT_NEAR(e.dot(n), 0.0, 1e-15);
  }
}

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(257);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(16, [](std::size_t i) {
                 if (i == 7) throw BadWindow("boom");
               }),
               BadWindow);
}

TEST(ThreadCount, RespectsEnvironmentCap) {
  setenv("EIGENLAB_THREADS", "1", 1);
  EXPECT_EQ(thread_count(), 1u);
  unsetenv("EIGENLAB_THREADS");
  EXPECT_GE(thread_count(), 1u);
}

TEST(Errors, KindNamesTheClass) {
  try {
    throw LadderMismatch("x");
  } catch (const Error& e) {
    EXPECT_STREQ(e.kind(), "LadderMismatch");
    EXPECT_NE(std::string(e.what()).find("LadderMismatch"), std::string::npos);
  }
}
