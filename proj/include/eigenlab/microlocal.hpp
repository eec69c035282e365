#ifndef EIGENLAB_MICROLOCAL_HPP
#define EIGENLAB_MICROLOCAL_HPP

// Phase-space lifts of eigenfunctions: Husimi densities on a discretized unit
// cosphere bundle, support extraction and comparisons against flow-invariant
// and Liouville reference measures.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eigenlab/common.hpp"
#include "eigenlab/eigenmodes.hpp"
#include "eigenlab/geometry.hpp"

namespace eigenlab {

// Cells of a chart window of S*M: base rows (r or x1), base columns (theta or x2)
// and fiber angles. Cell centers sit on the unit shell, covector
// cos(phi) e1 + sin(phi) e2 in the tangent frame of the base point.
struct PhaseGrid {
  ManifoldModel model;
  int n1 = 64, n2 = 64, nphi = 64;
  double lo1 = 0.2, hi1 = kPi - 0.2;

  static PhaseGrid sphere(int nr = 64, int ntheta = 64, int nphi = 64, double r_lo = 0.2, double r_hi = kPi - 0.2,
                          const Mat3& frame = Mat3::Identity()) {
    if (nr < 1 || ntheta < 1 || nphi < 1 || !(r_lo > 0) || !(r_hi < kPi) || !(r_lo < r_hi))
      throw ConfigError("invalid sphere phase grid");
    PhaseGrid g;
    g.model = ManifoldModel::round_sphere();
    g.model.frame = frame;
    g.n1 = nr;
    g.n2 = ntheta;
    g.nphi = nphi;
    g.lo1 = r_lo;
    g.hi1 = r_hi;
    return g;
  }

  static PhaseGrid torus(int n = 64, int nphi = 64) {
    if (n < 1 || nphi < 1) throw ConfigError("invalid torus phase grid");
    PhaseGrid g;
    g.model = ManifoldModel::flat_torus();
    g.n1 = g.n2 = n;
    g.nphi = nphi;
    g.lo1 = 0.0;
    g.hi1 = kTwoPi;
    return g;
  }

  std::size_t size() const { return static_cast<std::size_t>(n1) * n2 * nphi; }
  std::size_t base_count() const { return static_cast<std::size_t>(n1) * n2; }
  double d1() const { return (hi1 - lo1) / n1; }
  double d2() const { return kTwoPi / n2; }
  double dphi() const { return kTwoPi / nphi; }

  std::size_t index(int i, int j, int l) const {
    return (static_cast<std::size_t>(i) * n2 + static_cast<std::size_t>(j)) * nphi + static_cast<std::size_t>(l);
  }
  void unpack(std::size_t c, int& i, int& j, int& l) const {
    l = static_cast<int>(c % nphi);
    c /= nphi;
    j = static_cast<int>(c % n2);
    i = static_cast<int>(c / n2);
  }

  double coord1(int i) const { return lo1 + (i + 0.5) * d1(); }
  double coord2(int j) const { return j * d2(); }
  double angle(int l) const { return l * dphi(); }

  Vec3 base(int i, int j) const {
    if (model.is_sphere()) return sphere_embed(model, coord1(i), coord2(j));
    return {coord1(i), coord2(j), 0.0};
  }

  PhaseState center(std::size_t c) const {
    int i, j, l;
    unpack(c, i, j, l);
    return unit_state(model, base(i, j), angle(l));
  }

  PhasePoint center_chart(std::size_t c) const {
    int i, j, l;
    unpack(c, i, j, l);
    if (model.is_sphere()) {
      const double s = std::sin(coord1(i));
      return {Vec2(coord1(i), coord2(j)), Vec2(std::cos(angle(l)), s * std::sin(angle(l)))};
    }
    return {Vec2(coord1(i), coord2(j)), Vec2(std::cos(angle(l)), std::sin(angle(l)))};
  }

  // Liouville measure of a cell.
  double cell_measure(std::size_t c) const {
    int i, j, l;
    unpack(c, i, j, l);
    const double area1 = model.is_sphere() ? std::cos(lo1 + i * d1()) - std::cos(lo1 + (i + 1) * d1()) : d1();
    return area1 * d2() * dphi();
  }

  // Largest base extent of a cell (arclength).
  double base_cell_size() const { return std::max(d1(), d2()); }

  // Sasaki-scale diameter of a cell.
  double cell_diameter() const {
    const double b = std::hypot(d1(), d2());
    return std::hypot(b, dphi());
  }

  // Nearest cell to an arbitrary unit state; rows outside the window clamp to the edge.
  std::size_t locate(const PhaseState& s) const {
    double a, b;
    if (model.is_sphere()) {
      const Vec2 rt = sphere_chart_of(model, s.x);
      a = rt.x();
      b = rt.y();
    } else {
      a = wrap_angle(s.x.x());
      b = wrap_angle(s.x.y());
    }
    const auto [e1, e2] = tangent_frame(model, s.x);
    const double phi = wrap_angle(std::atan2(s.xi.dot(e2), s.xi.dot(e1)));
    const int i = std::clamp(static_cast<int>(std::floor((a - lo1) / d1())), 0, n1 - 1);
    const int j = static_cast<int>(std::lround(b / d2())) % n2;
    const int l = static_cast<int>(std::lround(phi / dphi())) % nphi;
    return index(i, j, l);
  }

  bool in_window(const PhaseState& s) const {
    if (!model.is_sphere()) return true;
    const double r = sphere_chart_of(model, s.x).x();
    return r >= lo1 && r <= hi1;
  }
};

// Evaluates an eigenfunction at chart-free base points.
class ModeEvaluator {
 public:
  explicit ModeEvaluator(const Eigenfunction& u) : u_(u) {
    if (u.on_sphere()) table_ = std::make_shared<SphereTable>(u);
  }
  cplx operator()(const Vec3& X) const {
    if (table_) return (*table_)(X);
    return evaluate(u_, Vec2(X.x(), X.y()));
  }
  const Eigenfunction& function() const { return u_; }

 private:
  Eigenfunction u_;
  std::shared_ptr<SphereTable> table_;
};

// Coherent-state transform |<u, phi_(x0, xi0)>|^2 with a Gaussian of variance
// width * h in geodesic normal coordinates at x0 and phase e^{i <w, xi0> / h}.
// The patch integral uses a square lattice of spacing <= 1.25 h truncated at 4 sigma.
class HusimiProbe {
 public:
  HusimiProbe(const Eigenfunction& u, const ManifoldModel& model, double h, double width)
      : eval_(u), model_(model), h_(h), width_(width) {
    if (!(width >= 0.5 && width <= 2.0)) throw ConfigError("coherent-state width must lie in [0.5, 2]");
    if (!(h > 0)) throw ConfigError("semiclassical parameter must be positive");
    sigma_ = std::sqrt(width * h);
    const double radius = 4.0 * sigma_;
    const int half = static_cast<int>(std::ceil(radius / (1.25 * h)));
    step_ = radius / half;
    m_ = 2 * half + 1;
    offsets_.resize(m_);
    for (int i = 0; i < m_; ++i) offsets_[i] = (i - half) * step_;
    weights_ = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) {
        const double rho = std::hypot(offsets_[i], offsets_[j]);
        if (rho > radius) continue;
        double jac = 1.0;
        if (model_.is_sphere() && rho > 0) jac = std::sin(rho) / rho;
        weights_(i, j) = std::exp(-0.5 * rho * rho / (sigma_ * sigma_)) * jac * step_ * step_;
      }
  }

  double sigma() const { return sigma_; }
  double h() const { return h_; }
  double width() const { return width_; }
  int patch_size() const { return m_; }
  const ModeEvaluator& evaluator() const { return eval_; }

  // Windowed samples g(a, b) = u(exp_x0(a e1 + b e2)) * gaussian * jacobian * dA.
  Eigen::MatrixXcd patch(const Vec3& x0, const Vec3& e1, const Vec3& e2) const {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) {
        const double w = weights_(i, j);
        if (w == 0.0) continue;
        const double a = offsets_[i], b = offsets_[j];
        Vec3 y;
        if (model_.is_sphere()) {
          const double rho = std::hypot(a, b);
          const double sinc = rho > 0 ? std::sin(rho) / rho : 1.0;
          y = std::cos(rho) * x0 + sinc * (a * e1 + b * e2);
        } else {
          y = x0 + a * e1 + b * e2;
        }
        g(i, j) = eval_(y) * w;
      }
    return g;
  }

  // Densities at one base point for covectors c_l (e1 cos phi_l + e2 sin phi_l),
  // scaled by `speed` (1 on the unit shell).
  std::vector<double> fiber(const Vec3& x0, const Vec3& e1, const Vec3& e2, const std::vector<double>& phis,
                            double speed = 1.0) const {
    std::vector<Vec2> xis;
    xis.reserve(phis.size());
    for (double p : phis) xis.emplace_back(speed * std::cos(p), speed * std::sin(p));
    return transform(x0, e1, e2, xis);
  }

  // Densities for arbitrary covectors given in (e1, e2) components.
  std::vector<double> transform(const Vec3& x0, const Vec3& e1, const Vec3& e2, const std::vector<Vec2>& xis) const {
    const Eigen::MatrixXcd g = patch(x0, e1, e2);
    const int nxi = static_cast<int>(xis.size());
    Eigen::MatrixXcd E1(m_, nxi), E2(m_, nxi);
    for (int l = 0; l < nxi; ++l) {
      const double c = xis[l].x() / h_, s = xis[l].y() / h_;
      for (int i = 0; i < m_; ++i) {
        E1(i, l) = std::polar(1.0, -offsets_[i] * c);
        E2(i, l) = std::polar(1.0, -offsets_[i] * s);
      }
    }
    const Eigen::MatrixXcd H = g * E2;
    std::vector<double> out(nxi);
    for (int l = 0; l < nxi; ++l) out[l] = std::norm((E1.col(l).array() * H.col(l).array()).sum());
    return out;
  }

  // Density at a single phase point; the covector need not be unit length.
  double density(const PhaseState& z) const {
    const double speed = z.xi.norm();
    Vec3 e1, e2;
    if (model_.is_sphere()) {
      e1 = speed > 0 ? Vec3(z.xi / speed) : tangent_frame(model_, z.x).first;
      e2 = z.x.cross(e1);
    } else {
      e1 = Vec3::UnitX();
      e2 = Vec3::UnitY();
      return fiber(z.x, e1, e2, {std::atan2(z.xi.y(), z.xi.x())}, speed)[0];
    }
    return fiber(z.x, e1, e2, {0.0}, speed)[0];
  }

 private:
  ModeEvaluator eval_;
  ManifoldModel model_;
  double h_, width_, sigma_ = 0, step_ = 0;
  int m_ = 0;
  std::vector<double> offsets_;
  Eigen::MatrixXd weights_;
};

// Discrete probability measure on a PhaseGrid.
struct LiftEstimate {
  PhaseGrid grid;
  std::vector<double> weights;
  double h = 0.0;
  double width = 1.0;
  // density = weight * density_scale / cell_measure; max over cells kept for thresholds
  double density_scale = 1.0;
  double max_density = 0.0;
  std::string family;
  int k = 0;
  std::uint64_t seed = 0;
  std::shared_ptr<const HusimiProbe> probe;  // set for Husimi lifts

  double total() const { return pairwise_sum(weights); }
};

namespace detail {

inline void normalize_weights(LiftEstimate& lift) {
  const double z = lift.total();
  if (!(z > 0)) throw EmptySupport("lift has no mass");
  for (auto& w : lift.weights) w /= z;
  lift.density_scale *= z;
}

inline LiftEstimate empty_lift(const PhaseGrid& grid) {
  LiftEstimate e;
  e.grid = grid;
  e.weights.assign(grid.size(), 0.0);
  return e;
}

}  // namespace detail

inline LiftEstimate husimi_lift(const Eigenfunction& u, const PhaseGrid& grid, double width = 1.0) {
  if (u.on_sphere() != grid.model.is_sphere() ||
      (u.family == FamilyKind::TorusWave) != (grid.model.kind == ModelKind::FlatTorus2))
    throw UnsupportedModel("eigenfunction and grid live on different manifolds");
  auto probe = std::make_shared<const HusimiProbe>(u, grid.model, u.h, width);
  if (grid.base_cell_size() > 4.0 * probe->sigma())
    throw ResolutionMismatch("base cells exceed four coherent-state widths");

  LiftEstimate lift = detail::empty_lift(grid);
  lift.h = u.h;
  lift.width = width;
  lift.family = to_string(u.family);
  lift.k = u.family == FamilyKind::TorusWave ? static_cast<int>(std::lround(u.lambda)) : u.k;
  lift.seed = u.seed;
  lift.probe = probe;

  std::vector<double> phis(grid.nphi);
  for (int l = 0; l < grid.nphi; ++l) phis[l] = grid.angle(l);
  std::vector<double> density(grid.size());
  parallel_for(grid.base_count(), [&](std::size_t b) {
    const int i = static_cast<int>(b / grid.n2), j = static_cast<int>(b % grid.n2);
    const Vec3 x0 = grid.base(i, j);
    const auto [e1, e2] = tangent_frame(grid.model, x0);
    const std::vector<double> f = probe->fiber(x0, e1, e2, phis);
    for (int l = 0; l < grid.nphi; ++l) {
      const std::size_t c = grid.index(i, j, l);
      density[c] = f[l];
      lift.weights[c] = f[l] * grid.cell_measure(c);
    }
  });
  lift.max_density = *std::max_element(density.begin(), density.end());
  detail::normalize_weights(lift);
  return lift;
}

// Exact zonal defect measure: uniform in (fiber angle at the pole, flow time)
// over the great circles through `pole`, deposited on the nearest cells.
inline LiftEstimate zonal_measure_oracle(const PhaseGrid& grid, const Vec3& pole = Vec3::UnitZ(),
                                         int n_angle = 2048, int n_time = 2048) {
  if (!grid.model.is_sphere()) throw UnsupportedModel("zonal oracle lives on the round sphere");
  const Vec3 p = pole.normalized();
  const Vec3 q0 = any_orthonormal(p), q1 = p.cross(q0);
  std::vector<std::vector<std::pair<std::size_t, double>>> hits(static_cast<std::size_t>(n_angle));
  parallel_for(static_cast<std::size_t>(n_angle), [&](std::size_t a) {
    const double th = kTwoPi * (a + 0.5) / n_angle;
    const Vec3 q = std::cos(th) * q0 + std::sin(th) * q1;
    for (int s = 0; s < n_time; ++s) {
      const double t = kTwoPi * (s + 0.5) / n_time;
      const PhaseState z{std::cos(t) * p + std::sin(t) * q, -std::sin(t) * p + std::cos(t) * q};
      if (!grid.in_window(z)) continue;
      hits[a].push_back({grid.locate(z), 1.0});
    }
  });
  LiftEstimate lift = detail::empty_lift(grid);
  for (const auto& row : hits)
    for (const auto& [c, w] : row) lift.weights[c] += w;
  lift.family = "zonal-oracle";
  detail::normalize_weights(lift);
  return lift;
}

// Total-variation distance of two measures on the same grid.
inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("measures live on different grids");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
  return 0.5 * pairwise_sum(d);
}

// Pushes the lift forward by G_t with nearest-cell redeposit; returns the TV
// distance to the original. With subsamples > 1 each cell's mass is split over
// a subsamples^3 lattice of points inside the cell before transport.
inline double flow_invariance_defect(const LiftEstimate& lift, double t, int subsamples = 4) {
  if (std::abs(t) > 5.0) throw BadWindow("flow invariance is tested for |t| <= 5");
  if (subsamples < 1) throw ConfigError("subsamples must be positive");
  const PhaseGrid& g = lift.grid;
  const int s = subsamples;
  const double share = 1.0 / (s * s * s);
  std::vector<std::vector<std::size_t>> target(g.size());
  parallel_for(g.size(), [&](std::size_t c) {
    if (!(lift.weights[c] > 0)) return;
    int i, j, l;
    g.unpack(c, i, j, l);
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b)
        for (int q = 0; q < s; ++q) {
          const double u1 = g.coord1(i) + ((a + 0.5) / s - 0.5) * g.d1();
          const double u2 = g.coord2(j) + ((b + 0.5) / s - 0.5) * g.d2();
          const double ph = g.angle(l) + ((q + 0.5) / s - 0.5) * g.dphi();
          const Vec3 x = g.model.is_sphere() ? sphere_embed(g.model, u1, u2) : Vec3(u1, u2, 0.0);
          target[c].push_back(g.locate(flow_closed_form(g.model, unit_state(g.model, x, ph), t)));
        }
  });
  std::vector<double> pushed(g.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    for (std::size_t d : target[c]) pushed[d] += lift.weights[c] * share;
  return total_variation(pushed, lift.weights);
}

inline std::vector<double> liouville_weights(const PhaseGrid& grid) {
  std::vector<double> w(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) w[c] = grid.cell_measure(c);
  const double z = pairwise_sum(w);
  for (auto& x : w) x /= z;
  return w;
}

inline double liouville_deviation(const LiftEstimate& lift) {
  return total_variation(lift.weights, liouville_weights(lift.grid));
}

struct MeasureSupport {
  const LiftEstimate* lift = nullptr;
  std::vector<std::size_t> cells;
  double tau = 0.0;
  double retained_mass = 0.0;
  double support_leak() const { return 1.0 - retained_mass; }
};

inline MeasureSupport support_threshold(const LiftEstimate& lift, double tau) {
  if (!(tau > 0 && tau < 1)) throw ConfigError("tau must lie in (0, 1)");
  const double wmax = *std::max_element(lift.weights.begin(), lift.weights.end());
  MeasureSupport s;
  s.lift = &lift;
  s.tau = tau;
  std::vector<double> kept;
  for (std::size_t c = 0; c < lift.weights.size(); ++c)
    if (lift.weights[c] > 0 && lift.weights[c] >= tau * wmax) {
      s.cells.push_back(c);
      kept.push_back(lift.weights[c]);
    }
  if (s.cells.empty()) throw EmptySupport("no cell passes tau");
  s.retained_mass = pairwise_sum(kept);
  return s;
}

// A region given by its distance function; a cell counts when its center lies
// within dist_tol.
using DistanceToSet = std::function<double(const PhaseState&)>;

inline double measure_of_set(const LiftEstimate& lift, const DistanceToSet& region, double dist_tol) {
  std::vector<double> w(lift.weights.size(), 0.0);
  parallel_for(w.size(), [&](std::size_t c) {
    if (lift.weights[c] > 0 && region(lift.grid.center(c)) <= dist_tol) w[c] = lift.weights[c];
  });
  return pairwise_sum(w);
}

// --- reference sets -------------------------------------------------------

// Distance in R^3 x R^3 from a sphere state to the unit states of the great
// circles whose normals make the smallest angle alpha with `normal`: the
// minimal rotation moves (x, xi) by 2 sin(alpha / 2).
inline double distance_to_circle(const PhaseState& z, const Vec3& normal, bool both_orientations = true) {
  const Vec3 n = z.x.cross(z.xi).normalized();
  double c = n.dot(normal.normalized());
  if (both_orientations) c = std::abs(c);
  const double alpha = std::acos(std::clamp(c, -1.0, 1.0));
  return 2.0 * std::sin(0.5 * alpha);
}

// Distance to Lambda_0: all unit-speed great circles through +-p.
inline double distance_to_meridians(const PhaseState& z, const Vec3& p) {
  const Vec3 n = z.x.cross(z.xi).normalized();
  const double alpha = std::asin(std::min(1.0, std::abs(n.dot(p.normalized()))));
  return 2.0 * std::sin(0.5 * alpha);
}

// Distance to Lambda_{p, delta}: meridian states whose base lies within delta of p.
inline double distance_to_pole_flowout(const PhaseState& z, const Vec3& p, double delta) {
  const double d_lag = distance_to_meridians(z, p);
  const double dp = std::acos(std::clamp(z.x.dot(p.normalized()), -1.0, 1.0));
  return std::hypot(d_lag, std::max(0.0, dp - delta));
}

}  // namespace eigenlab

#endif  // EIGENLAB_MICROLOCAL_HPP
