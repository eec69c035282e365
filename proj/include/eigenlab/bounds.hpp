#ifndef EIGENLAB_BOUNDS_HPP
#define EIGENLAB_BOUNDS_HPP

// Sup norms with local refinement, growth-exponent fits, the local L2 ball
// bound and the restricted-support bound, plus theorem-consistency verdicts.

#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <fftw3.h>

#include "eigenlab/common.hpp"
#include "eigenlab/eigenmodes.hpp"
#include "eigenlab/flowout.hpp"
#include "eigenlab/geometry.hpp"
#include "eigenlab/microlocal.hpp"
#include "eigenlab/quadrature.hpp"

namespace eigenlab {

struct ScalingSample {
  double lambda = 0.0;
  double h = 0.0;
  double sup_value = 0.0;
  Vec2 argmax = Vec2::Zero();
  std::string family;
  int k = 0;
};

struct ScalingFit {
  double exponent = 0.0;
  double constant = 0.0;
  double r2 = 0.0;
  double lambda_min = 0.0, lambda_max = 0.0;
  std::size_t samples = 0;
};

struct BoundReport {
  std::string kind;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::map<std::string, double> params;
};

inline constexpr double kRefineTol = 1e-10;

// Coarse grid for sup_norm: spacing h/4 along both axes.
inline EvalGrid default_sup_grid(const Eigenfunction& u) {
  const double step = 0.25 * u.h;
  switch (u.family) {
    case FamilyKind::TorusWave: return EvalGrid::torus(static_cast<std::size_t>(std::ceil(kTwoPi / step)));
    case FamilyKind::OscillatorMode: {
      const double radius = std::sqrt(2.0 * 2.0 * u.h * (2 * u.n + std::abs(u.m) + 1)) + 8.0 * std::sqrt(u.h);
      return EvalGrid::plane_uniform(static_cast<std::size_t>(std::ceil(2.0 * radius / step)), radius);
    }
    default: {
      const std::size_t nr = static_cast<std::size_t>(std::ceil(kPi / step));
      std::size_t nt = 8;
      while (static_cast<double>(nt) < kTwoPi / step || nt < 2 * static_cast<std::size_t>(u.k) + 1) nt *= 2;
      return EvalGrid::sphere_latlon(nr, nt);
    }
  }
}

namespace detail {

inline double abs_at(const Eigenfunction& u, const Vec2& x) { return std::abs(evaluate(u, x)); }

inline int active_modes(const Eigenfunction& u) {
  int n = 0;
  for (const auto& c : u.coeffs) n += c != cplx(0.0);
  return n;
}

// Hill-climb on a shrinking 3x3 stencil; stops once the gain per round falls
// below tol and the step is below 1e-9 of the start step.
inline std::pair<Vec2, double> refine_max(const std::function<double(const Vec2&)>& f, Vec2 x, double value,
                                          Vec2 step, double tol) {
  const double floor = 1e-9 * step.norm();
  for (int iter = 0; iter < 200 && step.norm() > floor; ++iter) {
    Vec2 best = x;
    double best_v = value;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) {
        if (!a && !b) continue;
        const Vec2 y = x + Vec2(a * step.x(), b * step.y());
        const double v = f(y);
        if (v > best_v) {
          best_v = v;
          best = y;
        }
      }
    if (best_v > value) {
      const double gain = best_v - value;
      x = best;
      value = best_v;
      if (gain < tol) step *= 0.5;
    } else {
      step *= 0.5;
    }
  }
  return {x, value};
}

}  // namespace detail

// max |u| on the coarse grid (poles included for sphere families), followed by
// local refinement around the coarse winner.
inline ScalingSample sup_norm(const Eigenfunction& u, const EvalGrid& coarse, double refine_tol = kRefineTol) {
  ScalingSample s;
  s.lambda = u.lambda;
  s.h = u.h;
  s.family = to_string(u.family);
  s.k = u.family == FamilyKind::OscillatorMode ? 2 * u.n + std::abs(u.m) + 1 : u.k;
  const double step_limit = 0.25 * u.h * (1.0 + 1e-9);

  if (u.on_sphere()) {
    if (coarse.layout != GridLayout::SphereLatLon) throw ConfigError("sphere sup norm needs a SphereLatLon grid");
    const double dr = coarse.axis1[1] - coarse.axis1[0];
    const std::size_t nt = coarse.cols();
    if (dr > step_limit || kTwoPi / nt > step_limit) throw Underresolved("coarse grid spacing exceeds h/4");
    const bool single = detail::active_modes(u) == 1;
    std::vector<double> rows(coarse.axis1);
    rows.insert(rows.begin(), 0.0);
    rows.push_back(kPi);
    std::vector<double> row_max(rows.size());
    std::vector<double> row_arg(rows.size(), 0.0);
    const int k = u.k;
    parallel_for(rows.size(), [&](std::size_t i) {
      const std::vector<cplx> a = sphere_row(u, rows[i]);
      if (single) {
        double best = 0.0;
        for (const auto& c : a) best = std::max(best, std::abs(c));
        row_max[i] = best;
        return;
      }
      fftw_complex* buf = fftw_alloc_complex(nt);
      for (std::size_t j = 0; j < nt; ++j) buf[j][0] = buf[j][1] = 0.0;
      for (int m = -k; m <= k; ++m) {
        const std::size_t idx = static_cast<std::size_t>((m % static_cast<long>(nt) + static_cast<long>(nt)) % static_cast<long>(nt));
        buf[idx][0] += a[m + k].real();
        buf[idx][1] += a[m + k].imag();
      }
      static std::mutex plan_mu;
      fftw_plan plan;
      {
        std::lock_guard<std::mutex> lock(plan_mu);
        plan = fftw_plan_dft_1d(static_cast<int>(nt), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
      }
      fftw_execute(plan);
      double best = -1.0;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < nt; ++j) {
        const double v = std::hypot(buf[j][0], buf[j][1]);
        if (v > best) {
          best = v;
          arg = j;
        }
      }
      {
        std::lock_guard<std::mutex> lock(plan_mu);
        fftw_destroy_plan(plan);
      }
      fftw_free(buf);
      row_max[i] = best;
      row_arg[i] = kTwoPi * static_cast<double>(arg) / static_cast<double>(nt);
    });
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(row_max.begin(), row_max.end()) - row_max.begin());
    Vec2 x0(rows[best], row_arg[best]);
    double v0 = row_max[best];
    if (single && u.family == FamilyKind::HighestWeight) x0.y() = 0.0;
    // refinement in (r, theta); r is reflected into [0, pi]
    auto f = [&](const Vec2& y) {
      double r = y.x();
      double th = y.y();
      if (r < 0) {
        r = -r;
        th += kPi;
      }
      if (r > kPi) {
        r = kTwoPi - r;
        th += kPi;
      }
      return detail::abs_at(u, Vec2(r, th));
    };
    // the coarse value is recomputed at the winner so refinement compares like with like
    v0 = f(x0);
    const Vec2 step(0.5 * dr, single ? 0.0 : 0.5 * kTwoPi / nt);
    auto [x1, v1] = detail::refine_max(f, x0, v0, step, refine_tol);
    const double moved_r = std::abs(x1.x() - x0.x()) / dr;
    const double moved_t = single ? 0.0 : std::abs(std::remainder(x1.y() - x0.y(), kTwoPi)) / (kTwoPi / nt);
    if (moved_r > 3.0 || moved_t > 3.0) throw Underresolved("refinement moved the argmax by more than 3 cells");
    if (x1.x() < 0) x1 = Vec2(-x1.x(), x1.y() + kPi);
    s.sup_value = std::max(v1, *std::max_element(row_max.begin(), row_max.end()));
    s.argmax = Vec2(x1.x(), wrap_angle(x1.y()));
    return s;
  }

  if (u.family == FamilyKind::OscillatorMode) {
    // |u| is radial: scan one ray with the grid's spacing
    const double step = coarse.axis1.size() > 1 ? coarse.axis1[1] - coarse.axis1[0] : u.h;
    if (step > step_limit) throw Underresolved("coarse grid spacing exceeds h/4");
    const double radius = coarse.extent;
    const std::size_t n = static_cast<std::size_t>(std::ceil(radius / step)) + 1;
    std::vector<double> vals(n);
    parallel_for(n, [&](std::size_t i) { vals[i] = detail::abs_at(u, Vec2(static_cast<double>(i) * step, 0.0)); });
    const std::size_t best = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    auto f = [&](const Vec2& y) { return detail::abs_at(u, Vec2(std::abs(y.x()), 0.0)); };
    auto [x1, v1] = detail::refine_max(f, Vec2(static_cast<double>(best) * step, 0.0), vals[best], Vec2(0.5 * step, 0.0), refine_tol);
    if (std::abs(x1.x() - static_cast<double>(best) * step) / step > 3.0)
      throw Underresolved("refinement moved the argmax by more than 3 cells");
    s.sup_value = std::max(v1, vals[best]);
    s.argmax = Vec2(std::abs(x1.x()), 0.0);
    return s;
  }

  // torus and generic plane grids: every node, then refinement
  const double d1 = coarse.axis1.size() > 1 ? coarse.axis1[1] - coarse.axis1[0] : kTwoPi;
  const double d2 = coarse.axis2.size() > 1 ? coarse.axis2[1] - coarse.axis2[0] : kTwoPi;
  if (d1 > step_limit || d2 > step_limit) throw Underresolved("coarse grid spacing exceeds h/4");
  std::vector<double> row_max(coarse.rows());
  std::vector<std::size_t> row_arg(coarse.rows());
  parallel_for(coarse.rows(), [&](std::size_t i) {
    double best = -1.0;
    for (std::size_t j = 0; j < coarse.cols(); ++j) {
      const double v = detail::abs_at(u, coarse.node(i, j));
      if (v > best) {
        best = v;
        row_arg[i] = j;
      }
    }
    row_max[i] = best;
  });
  const std::size_t bi = static_cast<std::size_t>(std::max_element(row_max.begin(), row_max.end()) - row_max.begin());
  const Vec2 x0 = coarse.node(bi, row_arg[bi]);
  auto f = [&](const Vec2& y) { return detail::abs_at(u, y); };
  auto [x1, v1] = detail::refine_max(f, x0, row_max[bi], Vec2(0.5 * d1, 0.5 * d2), refine_tol);
  if ((x1 - x0).cwiseAbs().x() / d1 > 3.0 || (x1 - x0).cwiseAbs().y() / d2 > 3.0)
    throw Underresolved("refinement moved the argmax by more than 3 cells");
  s.sup_value = std::max(v1, row_max[bi]);
  s.argmax = x1;
  return s;
}

inline ScalingSample sup_norm(const Eigenfunction& u, double refine_tol = kRefineTol) {
  return sup_norm(u, default_sup_grid(u), refine_tol);
}

// Least squares of log sup against log lambda.
inline ScalingFit fit_growth(const std::vector<ScalingSample>& samples) {
  if (samples.size() < 5) throw InsufficientSamples("growth fit needs at least 5 samples");
  std::vector<double> x, y;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& s : samples) {
    if (!(s.lambda > 0 && s.sup_value > 0)) throw InsufficientSamples("samples need positive lambda and sup");
    x.push_back(std::log(s.lambda));
    y.push_back(std::log(s.sup_value));
    lo = std::min(lo, s.lambda);
    hi = std::max(hi, s.lambda);
  }
  if (hi < 4.0 * lo) throw InsufficientSamples("lambda must span a factor of 4");
  const LineFit f = fit_line(x, y);
  ScalingFit out;
  out.exponent = f.slope;
  out.constant = std::exp(f.intercept);
  out.r2 = f.r2;
  out.lambda_min = lo;
  out.lambda_max = hi;
  out.samples = samples.size();
  return out;
}

// --- local L2 mass on geodesic balls --------------------------------------

// ||u||_{L2(B_delta(y))}^2 in geodesic polar coordinates about y:
// Gauss-Legendre in the radius, trapezoid in the angle.
inline double ball_mass_squared(const ModeEvaluator& u, const ManifoldModel& model, const Vec3& y, double delta,
                                double lambda) {
  const unsigned nr = static_cast<unsigned>(std::ceil(lambda * delta)) + 20;
  const int na = static_cast<int>(std::ceil(2.0 * lambda * delta)) + 32;
  const GaussLegendre gl = gauss_legendre(nr, 0.0, delta);
  const auto [e1, e2] = tangent_frame(model, y);
  std::vector<double> ring(nr);
  for (unsigned i = 0; i < nr; ++i) {
    const double rho = gl.nodes[i];
    std::vector<double> terms(na);
    for (int a = 0; a < na; ++a) {
      const double al = kTwoPi * a / na;
      const Vec3 dir = std::cos(al) * e1 + std::sin(al) * e2;
      const Vec3 p = model.is_sphere() ? Vec3(std::cos(rho) * y + std::sin(rho) * dir) : Vec3(y + rho * dir);
      terms[a] = std::norm(u(p));
    }
    const double jac = model.is_sphere() ? std::sin(rho) : rho;
    ring[i] = pairwise_sum(terms) * (kTwoPi / na) * jac * gl.weights[i];
  }
  return pairwise_sum(ring);
}

// Spiral lattice of n base points on the sphere, plus both poles.
inline std::vector<Vec3> fibonacci_sphere(int n) {
  std::vector<Vec3> pts;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    pts.emplace_back(rad * std::cos(golden * i), rad * std::sin(golden * i), z);
  }
  pts.emplace_back(0, 0, 1);
  pts.emplace_back(0, 0, -1);
  return pts;
}

inline std::vector<Vec3> torus_lattice(int n) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pts.emplace_back(kTwoPi * i / n, kTwoPi * j / n, 0.0);
  return pts;
}

inline double injectivity_safe_radius(const ManifoldModel& model) {
  return model.is_sphere() ? kPi / 2 : kPi;
}

// lhs = ||u||_inf, rhs_core = lambda^{1/2} delta^{-1/2} max_x ||u||_{L2(B_delta(x))}
// with x over a base lattice that also contains the requested point.
inline BoundReport check_sogge_local(const Eigenfunction& u, const Vec2& x, double delta, int lattice = 64) {
  const ManifoldModel model = u.model();
  if (model.kind == ModelKind::EuclideanPlane2) throw UnsupportedModel("local bound is tested on compact models");
  if (!(delta >= 1.0 / u.lambda && delta <= injectivity_safe_radius(model)))
    throw BadWindow("delta must lie in [1/lambda, injectivity-safe radius]");
  std::vector<Vec3> centers = model.is_sphere() ? fibonacci_sphere(lattice) : torus_lattice(static_cast<int>(std::sqrt(lattice)));
  centers.push_back(embed_base(model, x));
  const ModeEvaluator eval(u);
  std::vector<double> mass(centers.size());
  parallel_for(centers.size(), [&](std::size_t i) { mass[i] = ball_mass_squared(eval, model, centers[i], delta, u.lambda); });
  const std::size_t best = static_cast<std::size_t>(std::max_element(mass.begin(), mass.end()) - mass.begin());
  BoundReport rep;
  rep.kind = "sogge-local";
  rep.lhs = sup_norm(u).sup_value;
  rep.rhs = std::sqrt(u.lambda / delta) * std::sqrt(mass[best]);
  rep.ratio = rep.lhs / rep.rhs;
  rep.params = {{"lambda", u.lambda}, {"delta", delta}, {"ball_l2", std::sqrt(mass[best])},
                {"ball_l2_at_x", std::sqrt(mass.back())}, {"lattice", static_cast<double>(centers.size())}};
  return rep;
}

// --- restricted-support bound -----------------------------------------------

// max |u| over the geodesic ball B(x, rho): polar lattice of spacing h/4, then refinement.
inline double sup_on_ball(const Eigenfunction& u, const Vec3& x, double rho) {
  const ManifoldModel model = u.model();
  const auto [e1, e2] = tangent_frame(model, x);
  auto point = [&](double s, double a) {
    const Vec3 dir = std::cos(a) * e1 + std::sin(a) * e2;
    return model.is_sphere() ? Vec3(std::cos(s) * x + std::sin(s) * dir) : Vec3(x + s * dir);
  };
  auto f = [&](const Vec2& q) {
    const double s = std::clamp(q.x(), 0.0, rho);
    return std::abs(evaluate(u, point(s, q.y())));
  };
  const double step = 0.25 * u.h;
  const int nr = static_cast<int>(std::ceil(rho / step));
  std::vector<double> best_v(nr + 1, -1.0), best_a(nr + 1, 0.0);
  parallel_for(static_cast<std::size_t>(nr + 1), [&](std::size_t i) {
    const double s = rho * static_cast<double>(i) / nr;
    const int na = std::max(1, static_cast<int>(std::ceil(kTwoPi * s / step)));
    for (int a = 0; a < na; ++a) {
      const double al = kTwoPi * a / na;
      const double v = f(Vec2(s, al));
      if (v > best_v[i]) {
        best_v[i] = v;
        best_a[i] = al;
      }
    }
  });
  const std::size_t bi = static_cast<std::size_t>(std::max_element(best_v.begin(), best_v.end()) - best_v.begin());
  const double s0 = rho * static_cast<double>(bi) / nr;
  const Vec2 x0(s0, best_a[bi]);
  const double ang_step = s0 > 0 ? 0.5 * step / s0 : 0.5;
  auto [x1, v1] = detail::refine_max(f, x0, best_v[bi], Vec2(0.5 * rho / nr, ang_step), kRefineTol);
  return std::max(v1, best_v[bi]);
}

struct LiftParams {
  int n1 = 64, n2 = 64, nphi = 64;
  double width = 1.0;
  double tau = 1e-2;
  RidgeOptions ridge;
};

struct CoverParams {
  int ndirs = 4096;
  int ntimes = 2048;
  std::vector<double> scales = default_scales();
  double proxy_cutoff = 0.0;  // 0 selects the calibrated cutoff
};

struct RelatedReport {
  std::vector<double> lambdas, lhs, ratios;
  double rhs = 0.0;
  double lhs_slope = 0.0;
  bool lhs_decreasing = false;
  CoverReport cover;
  Admissibility verdict = Admissibility::Inconclusive;
  double proxy_cutoff = 0.0;
  std::size_t ridge_directions = 0;
  double delta = 0.0;
  std::string family;
};

inline constexpr double kRatioFloor = 1e-6;

inline PhaseGrid lift_grid_for(const Eigenfunction& u, const LiftParams& lp) {
  if (u.family == FamilyKind::TorusWave) return PhaseGrid::torus(lp.n1, lp.nphi);
  return PhaseGrid::sphere(lp.n1, lp.n2, lp.nphi);
}

// lhs_k = h_k^{1/2} sup_{B(x, lambda_k^{-1/2})} |u_k| for each member; rhs is
// the square root of the finest-scale H^2 proxy of the ridge-restricted support
// of the largest-lambda member on A_x(delta/2, 3 delta).
inline RelatedReport check_related(const std::vector<Eigenfunction>& family, const Vec2& x, double delta,
                                   const LiftParams& lp = {}, const CoverParams& cp = {}) {
  if (family.size() < 3) throw InsufficientSamples("related check needs at least 3 members");
  if (!(delta >= 0.1 && delta <= 0.5)) throw BadWindow("delta must lie in [0.1, 0.5]");
  for (std::size_t i = 1; i < family.size(); ++i)
    if (!(family[i].lambda > family[i - 1].lambda)) throw ConfigError("family must have increasing lambda");
  const ManifoldModel model = family.front().model();
  const Vec3 xb = embed_base(model, x);

  RelatedReport rep;
  rep.delta = delta;
  rep.family = to_string(family.front().family);
  for (const auto& u : family) {
    const double h = 1.0 / u.lambda;
    rep.lambdas.push_back(u.lambda);
    rep.lhs.push_back(std::sqrt(h) * sup_on_ball(u, xb, 1.0 / std::sqrt(u.lambda)));
  }
  rep.lhs_decreasing = true;
  for (std::size_t i = 1; i < rep.lhs.size(); ++i) rep.lhs_decreasing = rep.lhs_decreasing && rep.lhs[i] < rep.lhs[i - 1];
  {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < rep.lhs.size(); ++i)
      if (rep.lhs[i] > 0) {
        lx.push_back(std::log(rep.lambdas[i]));
        ly.push_back(std::log(rep.lhs[i]));
      }
    if (lx.size() >= 2) rep.lhs_slope = fit_line(lx, ly).slope;
  }

  const Eigenfunction& top = family.back();
  const LiftEstimate lift = husimi_lift(top, lift_grid_for(top, lp), lp.width);
  const FlowOutSet fo = build_flowout_at(model, xb, 3.0 * delta, cp.ndirs, cp.ntimes);
  const Annulus ann = annulus(fo, 0.5 * delta, 3.0 * delta);
  RidgeSupport rs;
  rep.cover = ridge_cover(*lift.probe, lift.max_density, ann, lp.tau, cp.scales, lp.ridge, &rs);
  rep.ridge_directions = rs.directions.size();
  rep.proxy_cutoff = cp.proxy_cutoff > 0 ? cp.proxy_cutoff : calibrated_proxy_cutoff(cp.scales);
  rep.verdict = admissibility_verdict(rep.cover, rep.proxy_cutoff);
  const std::size_t finest =
      static_cast<std::size_t>(std::min_element(rep.cover.scales.begin(), rep.cover.scales.end()) - rep.cover.scales.begin());
  rep.rhs = std::sqrt(rep.cover.proxies[finest]);
  for (double l : rep.lhs) rep.ratios.push_back(l / std::max(rep.rhs, kRatioFloor));
  return rep;
}

// --- theorem verdicts -------------------------------------------------------

inline constexpr double kExponentMargin = 0.05;

struct TheoremVerdict {
  std::string family;
  std::string theorem;
  double exponent = 0.0;
  bool all_admissible = false;
  bool any_not_admissible = false;
  bool violation = false;
  std::string summary() const { return violation ? "VIOLATION" : "CONSISTENT"; }
};

// VIOLATION only when every tested point is Admissible and the growth exponent
// still reaches the maximal rate (n - 1)/2 = 1/2 within the margin.
inline TheoremVerdict theorem_verdict(const std::string& family, const ScalingFit& fit,
                                      const std::vector<Admissibility>& verdicts, const std::string& theorem = "Theorem 3",
                                      double saturation = 0.5) {
  TheoremVerdict v;
  v.family = family;
  v.theorem = theorem;
  v.exponent = fit.exponent;
  v.all_admissible = !verdicts.empty();
  for (auto a : verdicts) {
    v.all_admissible = v.all_admissible && a == Admissibility::Admissible;
    v.any_not_admissible = v.any_not_admissible || a == Admissibility::NotAdmissible;
  }
  v.violation = v.all_admissible && fit.exponent >= saturation - kExponentMargin;
  return v;
}

}  // namespace eigenlab

#endif  // EIGENLAB_BOUNDS_HPP
