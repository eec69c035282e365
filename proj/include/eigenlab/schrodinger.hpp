#ifndef EIGENLAB_SCHRODINGER_HPP
#define EIGENLAB_SCHRODINGER_HPP

// Semiclassical Schrodinger operators -h^2 Delta + V on the plane, instantiated
// on the isotropic oscillator V = |x|^2: fixed-energy ladders, the energy
// surface, its fibers over base points, Hamiltonian flow-outs and lifts.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "eigenlab/bounds.hpp"
#include "eigenlab/common.hpp"
#include "eigenlab/eigenmodes.hpp"
#include "eigenlab/flowout.hpp"
#include "eigenlab/geometry.hpp"
#include "eigenlab/microlocal.hpp"

namespace eigenlab {

struct PotentialModel {
  std::function<double(const Vec2&)> V;
  std::function<Vec2(const Vec2&)> grad_V;
  double min_V = 0.0;
  double E = 1.0;
  double h = 0.01;
  bool harmonic = false;  // V = |x|^2, closed-form flow available

  static PotentialModel oscillator(double E = 1.0, double h = 0.01) {
    if (!(E > 0)) throw ConfigError("energy must exceed min V = 0");
    PotentialModel p;
    p.V = [](const Vec2& x) { return x.squaredNorm(); };
    p.grad_V = [](const Vec2& x) { return Vec2(2.0 * x); };
    p.E = E;
    p.h = h;
    p.harmonic = true;
    return p;
  }

  double energy(const Vec2& x, const Vec2& xi) const { return xi.squaredNorm() + V(x); }
  bool allowed(const Vec2& x) const { return V(x) < E; }
};

struct SigmaFiber {
  Vec2 x = Vec2::Zero();
  Vec2 center = Vec2::Zero();
  double radius = 0.0;

  Vec2 covector(double phi) const { return center + radius * Vec2(std::cos(phi), std::sin(phi)); }
};

// --- eigenfunctions -------------------------------------------------------

inline int fixed_energy_level(double E, double h) { return static_cast<int>(std::lround(E / (2.0 * h))); }

inline void check_ladder(int n, int m, double h, double E = 1.0) {
  if (!(h > 0 && h <= 0.1)) throw LadderMismatch("h must lie in (0, 0.1]");
  if (n < 0) throw LadderMismatch("radial number must be nonnegative");
  if (2 * n + std::abs(m) + 1 != fixed_energy_level(E, h))
    throw LadderMismatch("2n + |m| + 1 = " + std::to_string(2 * n + std::abs(m) + 1) + " but E/(2h) rounds to " +
                         std::to_string(fixed_energy_level(E, h)));
}

// Unit-norm eigenfunction of -h^2 Delta + |x|^2 with eigenvalue 2h(2n + |m| + 1) ~ E.
inline cplx oscillator_mode(int n, int m, double h, const Vec2& x, double E = 1.0) {
  check_ladder(n, m, h, E);
  return eval_oscillator(n, m, h, x);
}

inline Eigenfunction oscillator_member(int n, int m, double h, double E = 1.0) {
  check_ladder(n, m, h, E);
  return oscillator_family(n, m, h);
}

// h is moved to E/(2N) so that the eigenvalue equals E exactly; the radial
// ladder (m = 0) needs N odd and takes the odd N nearest E/(2h).
inline std::vector<Eigenfunction> radial_ladder(const std::vector<double>& hs, double E = 1.0) {
  std::vector<Eigenfunction> out;
  for (double h : hs) {
    if (!(h > 0 && h <= 0.1)) throw LadderMismatch("h must lie in (0, 0.1]");
    const double target = E / (2.0 * h);
    int N = static_cast<int>(std::lround(target));
    if (N % 2 == 0) N += target >= N ? 1 : -1;
    const double hn = E / (2.0 * N);
    out.push_back(oscillator_member((N - 1) / 2, 0, hn, E));
  }
  return out;
}

inline std::vector<Eigenfunction> circular_ladder(const std::vector<double>& hs, double E = 1.0) {
  std::vector<Eigenfunction> out;
  for (double h : hs) {
    if (!(h > 0 && h <= 0.1)) throw LadderMismatch("h must lie in (0, 0.1]");
    const int N = fixed_energy_level(E, h);
    out.push_back(oscillator_member(0, N - 1, E / (2.0 * N), E));
  }
  return out;
}

inline const std::vector<double>& default_h_ladder() {
  static const std::vector<double> hs{1.0 / 40, 1.0 / 60, 1.0 / 100, 1.0 / 140, 1.0 / 200, 1.0 / 280, 1.0 / 400};
  return hs;
}

// --- classical dynamics -----------------------------------------------------

inline constexpr double kOscillatorPeriod = kPi;

struct OscillatorInvariants {
  double energy = 0.0;
  double angular_momentum = 0.0;
  Vec2 partial_energies = Vec2::Zero();  // x_i^2 + xi_i^2, the separation constants
};

inline OscillatorInvariants oscillator_invariants(const PhasePoint& z) {
  OscillatorInvariants inv;
  inv.energy = z.x.squaredNorm() + z.xi.squaredNorm();
  inv.angular_momentum = z.x.x() * z.xi.y() - z.x.y() * z.xi.x();
  inv.partial_energies = Vec2(z.x.x() * z.x.x() + z.xi.x() * z.xi.x(), z.x.y() * z.x.y() + z.xi.y() * z.xi.y());
  return inv;
}

namespace detail {

inline PhasePoint oscillator_closed_form(const PhasePoint& z, double t) {
  const double c = std::cos(2.0 * t), s = std::sin(2.0 * t);
  return {c * z.x + s * z.xi, -s * z.x + c * z.xi};
}

// Stormer-Verlet for xdot = 2 xi, xidot = -grad V, with step doubling.
inline PhasePoint verlet_V(const PotentialModel& model, PhasePoint z, double t, int steps) {
  const double dt = t / steps;
  for (int i = 0; i < steps; ++i) {
    z.xi -= 0.5 * dt * model.grad_V(z.x);
    z.x += 2.0 * dt * z.xi;
    z.xi -= 0.5 * dt * model.grad_V(z.x);
  }
  return z;
}

}  // namespace detail

// Hamiltonian flow of p = |xi|^2 + V.
inline PhasePoint classical_flow_V(const PotentialModel& model, const PhasePoint& z, double t, double tol = 1e-10,
                                   double shell_tol = kShellTol) {
  if (std::abs(model.energy(z.x, z.xi) - model.E) > shell_tol)
    throw ShellViolation("phase point is off the energy surface");
  if (model.harmonic) return detail::oscillator_closed_form(z, t);
  int steps = std::max(16, static_cast<int>(std::ceil(std::abs(t) / 0.01)));
  PhasePoint prev = detail::verlet_V(model, z, t, steps);
  for (int round = 0; round < 20; ++round) {
    steps *= 2;
    const PhasePoint next = detail::verlet_V(model, z, t, steps);
    const double err = std::max((next.x - prev.x).norm(), (next.xi - prev.xi).norm());
    if (err < tol) return next;
    prev = next;
  }
  throw NoConvergence("potential flow did not converge");
}

inline SigmaFiber sigma_fiber(const PotentialModel& model, const Vec2& x) {
  const double gap = model.E - model.V(x);
  if (!(gap > 0)) throw ForbiddenRegion("V(x) >= E: no fiber over a forbidden or turning point");
  SigmaFiber f;
  f.x = x;
  f.radius = std::sqrt(gap);
  return f;
}

// Lambda_{x,T,V}: Sigma_x flowed over a uniform [-T, T] lattice, embedded as
// (x1, x2, xi1, xi2, 0, 0) so the flow-out cover pipeline applies unchanged.
inline FlowOutSet build_flowout_V(const PotentialModel& model, const Vec2& x, double T, int ndirs, int ntimes) {
  if (!(T > 0)) throw BadWindow("flow-out horizon must be positive");
  if (ndirs < 64 || ntimes < 64) throw InsufficientSamples("flow-out lattice needs ndirs, ntimes >= 64");
  if (ndirs % 4) throw ConfigError("ndirs must be a multiple of 4");
  const SigmaFiber sf = sigma_fiber(model, x);
  FlowOutSet fo;
  fo.model = ManifoldModel::euclidean_plane();
  fo.base = Vec3(x.x(), x.y(), 0.0);
  fo.T = T;
  fo.fiber.resize(ndirs);
  for (int i = 0; i < ndirs; ++i) {
    const Vec2 xi = sf.covector(kTwoPi * i / ndirs);
    fo.fiber[i] = PhaseState{fo.base, Vec3(xi.x(), xi.y(), 0.0)};
  }
  fo.times = detail::symmetric_times(T, ntimes);
  fo.flow = [model](const PhaseState& z, double t) {
    const PhasePoint p =
        classical_flow_V(model, PhasePoint{Vec2(z.x.x(), z.x.y()), Vec2(z.xi.x(), z.xi.y())}, t, 1e-10, 1e-6);
    return PhaseState{Vec3(p.x.x(), p.x.y(), 0.0), Vec3(p.xi.x(), p.xi.y(), 0.0)};
  };
  const ManifoldModel plane = fo.model;
  fo.embed = [plane](const PhaseState& z) { return box_embedding(plane, z); };
  return fo;
}

// --- phase-space lift on {V <= E + 0.5} x {|xi| <= sqrt(E + 0.5)} ---------

struct PlaneLift {
  double x_half = 0.0, xi_max = 0.0;
  int nx = 0, nrho = 0, nphi = 0;
  double h = 0.0;
  std::vector<Vec2> bases;          // base cell centers kept inside V <= E + 0.5
  std::vector<double> density;      // [base][rho][phi]
  double base_cell = 0.0;           // dx^2
  double max_density = 0.0;
  std::shared_ptr<const HusimiProbe> probe;

  double rho_at(int r) const { return (r + 0.5) * xi_max / nrho; }
  double phi_at(int p) const { return kTwoPi * (p + 0.5) / nphi; }
  double measure(int r) const { return base_cell * rho_at(r) * (xi_max / nrho) * (kTwoPi / nphi); }
  std::size_t index(std::size_t b, int r, int p) const {
    return (b * static_cast<std::size_t>(nrho) + static_cast<std::size_t>(r)) * static_cast<std::size_t>(nphi) +
           static_cast<std::size_t>(p);
  }
};

inline PlaneLift plane_lift(const Eigenfunction& u, const PotentialModel& model, int nx = 32, int nrho = 16,
                            int nphi = 48, double width = 1.0) {
  if (u.family != FamilyKind::OscillatorMode) throw UnsupportedModel("plane lift expects an oscillator mode");
  PlaneLift L;
  L.h = u.h;
  L.x_half = std::sqrt(model.E + 0.5);
  L.xi_max = std::sqrt(model.E + 0.5);
  L.nx = nx;
  L.nrho = nrho;
  L.nphi = nphi;
  L.probe = std::make_shared<const HusimiProbe>(u, ManifoldModel::euclidean_plane(), u.h, width);
  const double dx = 2.0 * L.x_half / nx;
  if (dx > 4.0 * L.probe->sigma()) throw ResolutionMismatch("base cells exceed four coherent-state widths");
  L.base_cell = dx * dx;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j) {
      const Vec2 x(-L.x_half + (i + 0.5) * dx, -L.x_half + (j + 0.5) * dx);
      if (model.V(x) <= model.E + 0.5) L.bases.push_back(x);
    }
  std::vector<Vec2> xis;
  for (int r = 0; r < nrho; ++r)
    for (int p = 0; p < nphi; ++p) xis.push_back(L.rho_at(r) * Vec2(std::cos(L.phi_at(p)), std::sin(L.phi_at(p))));
  L.density.assign(L.bases.size() * xis.size(), 0.0);
  parallel_for(L.bases.size(), [&](std::size_t b) {
    const Vec3 x0(L.bases[b].x(), L.bases[b].y(), 0.0);
    const std::vector<double> d = L.probe->transform(x0, Vec3::UnitX(), Vec3::UnitY(), xis);
    std::copy(d.begin(), d.end(), L.density.begin() + static_cast<std::ptrdiff_t>(b * xis.size()));
  });
  L.max_density = *std::max_element(L.density.begin(), L.density.end());
  return L;
}

// Fraction of lift mass with |p - E| > thickness / 2.
inline double shell_mass_outside(const PlaneLift& L, const PotentialModel& model, double thickness = 0.1) {
  std::vector<double> in(L.bases.size()), all(L.bases.size());
  for (std::size_t b = 0; b < L.bases.size(); ++b) {
    const double v = model.V(L.bases[b]);
    std::vector<double> ti, ta;
    for (int r = 0; r < L.nrho; ++r)
      for (int p = 0; p < L.nphi; ++p) {
        const double w = L.density[L.index(b, r, p)] * L.measure(r);
        ta.push_back(w);
        const double rho = L.rho_at(r);
        if (std::abs(rho * rho + v - model.E) <= 0.5 * thickness) ti.push_back(w);
      }
    in[b] = pairwise_sum(ti);
    all[b] = pairwise_sum(ta);
  }
  const double total = pairwise_sum(all);
  if (!(total > 0)) throw EmptySupport("lift has no mass");
  return 1.0 - pairwise_sum(in) / total;
}

// --- the growth / admissibility dichotomy ------------------------------------

struct OscillatorDichotomy {
  std::vector<ScalingSample> origin_samples;  // |u(0)| along the radial ladder
  std::vector<ScalingSample> sup_samples;     // sup |u| along the circular ladder
  double origin_exponent = 0.0, sup_exponent = 0.0;  // fitted in h
  double origin_r2 = 0.0, sup_r2 = 0.0;
  double invariant_drift = 0.0;  // max drift of energy, x ^ xi and x_i^2 + xi_i^2
  Vec2 radial_point = Vec2::Zero(), circular_point = Vec2::Zero();
  CoverReport radial_cover, circular_cover;
  Admissibility radial_verdict = Admissibility::Inconclusive, circular_verdict = Admissibility::Inconclusive;
  std::vector<double> radial_scaled_sup, circular_scaled_sup;  // h^{1/2} sup_B |u|
  double proxy_cutoff = 0.0;
  double shell_mass_outside = 0.0;
  double lift_h = 0.0;
};

struct DichotomyOptions {
  std::vector<double> hs = default_h_ladder();
  double E = 1.0;
  Vec2 circular_point = Vec2(0.3, 0.0);  // inside {V < E}, off the origin and off |x| = sqrt(E/2)
  double delta = 0.3;
  double lift_h = 0.01;
  int ndirs = 1024, ntimes = 512;
  double tau = 1e-2;
  std::vector<double> scales = default_scales();
};

namespace detail {

// Samples invariants along 200 random-ish shell states over t in [0, 20].
inline double invariant_drift(const PotentialModel& model) {
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double a = 0.7 * i, b = 1.3 * i + 0.2, s = std::sin(0.37 * i) * 0.5 + 0.5;
    const double rx = std::sqrt(model.E * s), rxi = std::sqrt(model.E * (1.0 - s));
    const PhasePoint z{rx * Vec2(std::cos(a), std::sin(a)), rxi * Vec2(std::cos(b), std::sin(b))};
    const OscillatorInvariants i0 = oscillator_invariants(z);
    for (double t = 0.0; t <= 20.0; t += 0.5) {
      const OscillatorInvariants it = oscillator_invariants(classical_flow_V(model, z, t));
      worst = std::max({worst, std::abs(it.energy - i0.energy), std::abs(it.angular_momentum - i0.angular_momentum),
                        (it.partial_energies - i0.partial_energies).cwiseAbs().maxCoeff()});
    }
  }
  return worst;
}

inline CoverReport lift_cover(const Eigenfunction& u, const PotentialModel& pm, const Vec2& x,
                              const DichotomyOptions& opt, double* shell_out) {
  const PlaneLift L = plane_lift(u, pm);
  if (shell_out) *shell_out = shell_mass_outside(L, pm);
  const FlowOutSet fo = build_flowout_V(pm, x, 3.0 * opt.delta, opt.ndirs, opt.ntimes);
  const Annulus ann = annulus(fo, 0.5 * opt.delta, 3.0 * opt.delta);
  return ridge_cover(*L.probe, L.max_density, ann, opt.tau, opt.scales);
}

}  // namespace detail

inline OscillatorDichotomy oscillator_dichotomy(const DichotomyOptions& opt = {}) {
  OscillatorDichotomy out;
  const PotentialModel pm = PotentialModel::oscillator(opt.E);
  const auto radial = radial_ladder(opt.hs, opt.E);
  const auto circular = circular_ladder(opt.hs, opt.E);
  out.circular_point = opt.circular_point;
  if (!pm.allowed(opt.circular_point)) throw ForbiddenRegion("test point outside the allowed region");

  std::vector<double> lh, lo, ls;
  for (const auto& u : radial) {
    ScalingSample s;
    s.h = u.h;
    s.lambda = 1.0 / u.h;
    s.sup_value = std::abs(evaluate(u, Vec2(0.0, 0.0)));
    s.family = "oscillator-radial";
    s.k = 2 * u.n + 1;
    out.origin_samples.push_back(s);
    lh.push_back(std::log(u.h));
    lo.push_back(std::log(s.sup_value));
    out.radial_scaled_sup.push_back(std::sqrt(u.h) * sup_on_ball(u, Vec3::Zero(), opt.delta));
  }
  std::vector<double> lh2;
  for (const auto& u : circular) {
    ScalingSample s = sup_norm(u);
    s.family = "oscillator-circular";
    out.sup_samples.push_back(s);
    lh2.push_back(std::log(u.h));
    ls.push_back(std::log(s.sup_value));
    out.circular_scaled_sup.push_back(std::sqrt(u.h) *
                                      sup_on_ball(u, Vec3(opt.circular_point.x(), opt.circular_point.y(), 0.0), 0.5 * opt.delta));
  }
  const LineFit fo = fit_line(lh, lo), fs = fit_line(lh2, ls);
  out.origin_exponent = fo.slope;
  out.origin_r2 = fo.r2;
  out.sup_exponent = fs.slope;
  out.sup_r2 = fs.r2;
  out.invariant_drift = detail::invariant_drift(pm);

  const Eigenfunction ur = radial_ladder({opt.lift_h}, opt.E).front();
  const Eigenfunction uc = circular_ladder({opt.lift_h}, opt.E).front();
  out.lift_h = ur.h;
  out.proxy_cutoff = calibrated_proxy_cutoff(opt.scales);
  out.radial_cover = detail::lift_cover(ur, pm, Vec2::Zero(), opt, &out.shell_mass_outside);
  out.circular_cover = detail::lift_cover(uc, pm, opt.circular_point, opt, nullptr);
  out.radial_verdict = admissibility_verdict(out.radial_cover, out.proxy_cutoff);
  out.circular_verdict = admissibility_verdict(out.circular_cover, out.proxy_cutoff);
  return out;
}

}  // namespace eigenlab

#endif  // EIGENLAB_SCHRODINGER_HPP
