#ifndef EIGENLAB_GEOMETRY_HPP
#define EIGENLAB_GEOMETRY_HPP

// Classical side of the lab: model surfaces, their charts, the cotangent
// Hamiltonian p = |xi|^2_g / 2 and its flow.
//
// Two representations of a phase point coexist:
//   PhasePoint  chart coordinates (x, xi) as seen by a caller;
//   PhaseState  chart-free form. On the sphere x is a unit vector in R^3 and xi
//               is the covector turned into a tangent vector by the metric, so
//               S*S^2 sits inside R^3 x R^3. Torus and plane states keep their
//               global coordinates in the first two slots.
// All heavy lifting (flows, distances, box embeddings) happens on PhaseState,
// which is what lets trajectories cross the poles of a polar chart.

#include <array>
#include <cmath>
#include <string>

#include "eigenlab/common.hpp"

namespace eigenlab {

inline constexpr double kChartMargin = 1e-3;
inline constexpr double kShellTol = 1e-6;

enum class ModelKind { RoundSphere2, FlatTorus2, EuclideanPlane2 };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::RoundSphere2: return "RoundSphere2";
    case ModelKind::FlatTorus2: return "FlatTorus2";
    case ModelKind::EuclideanPlane2: return "EuclideanPlane2";
  }
  return "?";
}

struct ManifoldModel {
  ModelKind kind = ModelKind::RoundSphere2;
  // Sphere chart orientation: columns are the chart's x, y and pole axes in R^3.
  Mat3 frame = Mat3::Identity();
  double chart_margin = kChartMargin;

  static ManifoldModel round_sphere() { return {}; }

  // Polar chart centred on `pole`.
  static ManifoldModel round_sphere_with_pole(const Vec3& pole) {
    ManifoldModel m;
    const Vec3 e3 = pole.normalized();
    const Vec3 e1 = any_orthonormal(e3);
    m.frame.col(0) = e1;
    m.frame.col(1) = e3.cross(e1);
    m.frame.col(2) = e3;
    return m;
  }

  static ManifoldModel flat_torus() {
    ManifoldModel m;
    m.kind = ModelKind::FlatTorus2;
    return m;
  }

  static ManifoldModel euclidean_plane() {
    ManifoldModel m;
    m.kind = ModelKind::EuclideanPlane2;
    return m;
  }

  bool is_sphere() const { return kind == ModelKind::RoundSphere2; }
  Vec3 pole() const { return frame.col(2); }
};

struct PhasePoint {
  Vec2 x = Vec2::Zero();
  Vec2 xi = Vec2::Zero();
};

struct PhaseState {
  Vec3 x = Vec3::Zero();
  Vec3 xi = Vec3::Zero();
};

namespace detail {

inline bool finite2(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

inline void require_finite(const Vec2& v, const char* what) {
  if (!finite2(v)) throw ChartViolation(std::string(what) + " has non-finite components");
}

}  // namespace detail

// Validates a chart point. Sphere charts exclude chart_margin around both poles.
inline void check_chart(const ManifoldModel& model, const Vec2& x) {
  detail::require_finite(x, "chart point");
  if (model.is_sphere()) {
    const double r = x.x();
    if (r < model.chart_margin || r > kPi - model.chart_margin)
      throw ChartViolation("polar radius " + std::to_string(r) + " outside (margin, pi - margin)");
  }
}

inline bool chart_valid(const ManifoldModel& model, const Vec2& x) {
  if (!detail::finite2(x)) return false;
  if (model.is_sphere()) return x.x() >= model.chart_margin && x.x() <= kPi - model.chart_margin;
  return true;
}

// g^{-1}(x) in chart components.
inline Mat2 metric_inverse_at(const ManifoldModel& model, const Vec2& x) {
  check_chart(model, x);
  Mat2 g = Mat2::Identity();
  if (model.is_sphere()) {
    const double s = std::sin(x.x());
    g(1, 1) = 1.0 / (s * s);
  }
  return g;
}

inline double hamiltonian(const ManifoldModel& model, const PhasePoint& z) {
  detail::require_finite(z.xi, "covector");
  return 0.5 * z.xi.dot(metric_inverse_at(model, z.x) * z.xi);
}

// --- chart <-> embedding --------------------------------------------------

inline Vec3 sphere_embed(const ManifoldModel& model, double r, double theta) {
  return model.frame *
         Vec3(std::sin(r) * std::cos(theta), std::sin(r) * std::sin(theta), std::cos(r));
}

// (r, theta) of a unit vector in the model's polar chart. No margin check.
inline Vec2 sphere_chart_of(const ManifoldModel& model, const Vec3& X) {
  const Vec3 l = model.frame.transpose() * X;
  return {std::atan2(std::hypot(l.x(), l.y()), l.z()), wrap_angle(std::atan2(l.y(), l.x()))};
}

// Orthonormal frame (e_r, e_theta) at a base point. At a chart pole the limit
// along theta = 0 is used so the frame stays well defined.
inline std::pair<Vec3, Vec3> tangent_frame(const ManifoldModel& model, const Vec3& X) {
  if (!model.is_sphere()) return {Vec3::UnitX(), Vec3::UnitY()};
  const Vec3 l = model.frame.transpose() * X;
  const double rho = std::hypot(l.x(), l.y());
  if (rho < 1e-12) {
    const double sign = l.z() > 0 ? 1.0 : -1.0;
    return {sign * model.frame.col(0), model.frame.col(1)};
  }
  const double c = l.x() / rho, s = l.y() / rho;
  const Vec3 er = model.frame * Vec3(l.z() * c, l.z() * s, -rho);
  const Vec3 et = model.frame * Vec3(-s, c, 0.0);
  return {er, et};
}

inline Vec3 embed_base(const ManifoldModel& model, const Vec2& x) {
  if (model.is_sphere()) return sphere_embed(model, x.x(), x.y());
  if (model.kind == ModelKind::FlatTorus2) return {wrap_angle(x.x()), wrap_angle(x.y()), 0.0};
  return {x.x(), x.y(), 0.0};
}

inline PhaseState to_state(const ManifoldModel& model, const PhasePoint& z) {
  check_chart(model, z.x);
  detail::require_finite(z.xi, "covector");
  PhaseState s;
  s.x = embed_base(model, z.x);
  if (model.is_sphere()) {
    const auto [er, et] = tangent_frame(model, s.x);
    s.xi = z.xi.x() * er + (z.xi.y() / std::sin(z.x.x())) * et;
  } else {
    s.xi = {z.xi.x(), z.xi.y(), 0.0};
  }
  return s;
}

inline PhasePoint to_chart(const ManifoldModel& model, const PhaseState& s) {
  PhasePoint z;
  if (model.is_sphere()) {
    z.x = sphere_chart_of(model, s.x);
    check_chart(model, z.x);
    const auto [er, et] = tangent_frame(model, s.x);
    z.xi = {s.xi.dot(er), std::sin(z.x.x()) * s.xi.dot(et)};
  } else {
    z.x = embed_base(model, {s.x.x(), s.x.y()}).head<2>();
    z.xi = s.xi.head<2>();
  }
  return z;
}

// p = |xi|^2 / 2 on the chart-free form.
inline double state_hamiltonian(const PhaseState& s) { return 0.5 * s.xi.squaredNorm(); }

// Unit covector at base X making angle `angle` with e_r towards e_theta.
inline PhaseState unit_state(const ManifoldModel& model, const Vec3& X, double angle) {
  const auto [e1, e2] = tangent_frame(model, X);
  return {X, std::cos(angle) * e1 + std::sin(angle) * e2};
}

// --- geodesic flow --------------------------------------------------------

// Exact flow: great circles on the sphere, straight lines otherwise.
inline PhaseState flow_closed_form(const ManifoldModel& model, const PhaseState& z, double t) {
  if (model.is_sphere()) {
    const double s = z.xi.norm();
    if (s == 0.0) return z;
    const double c = std::cos(s * t), sn = std::sin(s * t);
    return {c * z.x + (sn / s) * z.xi, -s * sn * z.x + c * z.xi};
  }
  PhaseState out{z.x + t * z.xi, z.xi};
  if (model.kind == ModelKind::FlatTorus2) {
    out.x.x() = wrap_angle(out.x.x());
    out.x.y() = wrap_angle(out.x.y());
  }
  return out;
}

namespace detail {

// Canonical coordinates (r, theta, p_r, p_theta) of a sphere state in a polar chart.
struct PolarState {
  double r, theta, pr, pt;
};

inline PolarState to_polar(const Mat3& frame, const PhaseState& s) {
  ManifoldModel m;
  m.frame = frame;
  const Vec2 rt = sphere_chart_of(m, s.x);
  const auto [er, et] = tangent_frame(m, s.x);
  return {rt.x(), rt.y(), s.xi.dot(er), std::sin(rt.x()) * s.xi.dot(et)};
}

inline PhaseState from_polar(const Mat3& frame, const PolarState& p) {
  ManifoldModel m;
  m.frame = frame;
  PhaseState s;
  s.x = sphere_embed(m, p.r, p.theta);
  const auto [er, et] = tangent_frame(m, s.x);
  s.xi = p.pr * er + (p.pt / std::sin(p.r)) * et;
  return s;
}

inline double polar_energy(const PolarState& p) {
  const double s = std::sin(p.r);
  return 0.5 * (p.pr * p.pr + p.pt * p.pt / (s * s));
}

// Stormer-Verlet for H = p_r^2/2 + p_theta^2 / (2 sin^2 r). The kick is the
// exact flow of the second term (r frozen), the drift the exact flow of the
// first, so the composition is explicit and symplectic.
inline PolarState verlet_polar(PolarState p, double t, long steps) {
  const double tau = t / static_cast<double>(steps);
  const double pt2 = p.pt * p.pt;
  auto kick = [&](double dt) {
    const double s = std::sin(p.r), c = std::cos(p.r);
    p.pr += dt * pt2 * c / (s * s * s);
    p.theta += dt * p.pt / (s * s);
  };
  for (long i = 0; i < steps; ++i) {
    kick(0.5 * tau);
    p.r += tau * p.pr;
    kick(0.5 * tau);
  }
  p.theta = wrap_angle(p.theta);
  return p;
}

// Chart in which the great circle of z stays at least ~pi/4 away from the poles.
inline Mat3 working_frame(const Mat3& preferred, const PhaseState& z) {
  const Vec3 n = z.x.cross(z.xi).normalized();
  if (std::abs(n.dot(preferred.col(2))) >= std::sin(0.25)) return preferred;
  const Vec3 e3 = (n + z.x).normalized();
  const Vec3 e1 = any_orthonormal(e3);
  Mat3 f;
  f.col(0) = e1;
  f.col(1) = e3.cross(e1);
  f.col(2) = e3;
  return f;
}

}  // namespace detail

// Symplectic integration of the geodesic flow on the chart-free form. The step
// count is doubled until both the energy drift and the gap between successive
// resolutions are below tol.
inline PhaseState flow_state(const ManifoldModel& model, const PhaseState& z, double t, double tol) {
  if (!(tol > 0)) throw NoConvergence("tolerance must be positive");
  if (state_hamiltonian(z) <= 0) throw NoConvergence("flow needs p(z) > 0");
  if (t == 0.0) return z;
  if (!model.is_sphere()) return flow_closed_form(model, z, t);  // Verlet is exact for flat metrics

  const Mat3 frame = detail::working_frame(model.frame, z);
  const detail::PolarState start = detail::to_polar(frame, z);
  const double e0 = detail::polar_energy(start);
  long steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t) / 0.05)));
  detail::PolarState coarse = detail::verlet_polar(start, t, steps);
  for (; steps <= (1L << 24); steps *= 2) {
    const detail::PolarState fine = detail::verlet_polar(start, t, 2 * steps);
    const PhaseState a = detail::from_polar(frame, coarse);
    const PhaseState b = detail::from_polar(frame, fine);
    const double gap = std::sqrt((a.x - b.x).squaredNorm() + (a.xi - b.xi).squaredNorm());
    if (std::abs(detail::polar_energy(fine) - e0) <= tol && gap <= tol) return b;
    coarse = fine;
  }
  throw NoConvergence("step halving did not reach tolerance");
}

// G_t in chart coordinates. Throws ChartViolation when the end point leaves the
// caller's chart; the trajectory itself may cross chart poles.
inline PhasePoint geodesic_flow(const ManifoldModel& model, const PhasePoint& z, double t, double tol) {
  if (hamiltonian(model, z) <= 0) throw NoConvergence("flow needs p(z) > 0");
  return to_chart(model, flow_state(model, to_state(model, z), t, tol));
}

inline PhasePoint geodesic_flow_closed_form(const ManifoldModel& model, const PhasePoint& z, double t) {
  return to_chart(model, flow_closed_form(model, to_state(model, z), t));
}

// Conserved angular momentum xi_theta about the chart pole.
inline double clairaut(const ManifoldModel& model, const PhasePoint& z) {
  if (!model.is_sphere()) throw UnsupportedModel("Clairaut integral needs a rotationally symmetric model");
  check_chart(model, z.x);
  return z.xi.y();
}

inline double clairaut(const ManifoldModel& model, const PhaseState& s) {
  if (!model.is_sphere()) throw UnsupportedModel("Clairaut integral needs a rotationally symmetric model");
  return s.x.cross(s.xi).dot(model.pole());
}

// --- distances ------------------------------------------------------------

inline double torus_gap(double a, double b) { return std::abs(std::remainder(a - b, kTwoPi)); }

// Riemannian distance between chart-free base points.
inline double base_distance(const ManifoldModel& model, const Vec3& x, const Vec3& y) {
  switch (model.kind) {
    case ModelKind::RoundSphere2: return 2.0 * std::atan2((x - y).norm(), (x + y).norm());
    case ModelKind::FlatTorus2: return std::hypot(torus_gap(x.x(), y.x()), torus_gap(x.y(), y.y()));
    case ModelKind::EuclideanPlane2: return (x - y).norm();
  }
  return 0.0;
}

inline double geodesic_distance(const ManifoldModel& model, const Vec2& x, const Vec2& y) {
  check_chart(model, x);
  check_chart(model, y);
  return base_distance(model, embed_base(model, x), embed_base(model, y));
}

// Sasaki-equivalent distance without the shell precondition. Sphere: chordal
// distance in R^3 x R^3; torus: flat base distance and covector gap.
inline double phase_distance(const ManifoldModel& model, const PhaseState& a, const PhaseState& b) {
  if (model.is_sphere()) return std::sqrt((a.x - b.x).squaredNorm() + (a.xi - b.xi).squaredNorm());
  const double d = base_distance(model, a.x, b.x);
  return std::sqrt(d * d + (a.xi - b.xi).squaredNorm());
}

inline bool on_unit_shell(const PhaseState& s, double tol = kShellTol) {
  return std::abs(s.xi.norm() - 1.0) <= tol;
}

inline double sasaki_distance(const ManifoldModel& model, const PhaseState& a, const PhaseState& b) {
  if (!on_unit_shell(a) || !on_unit_shell(b)) throw ShellViolation("Sasaki distance needs unit covectors");
  return phase_distance(model, a, b);
}

inline double sasaki_distance(const ManifoldModel& model, const PhasePoint& a, const PhasePoint& b) {
  return sasaki_distance(model, to_state(model, a), to_state(model, b));
}

// Coordinates used for box counting and nearest-neighbour search. Euclidean
// distance in this embedding never exceeds phase_distance.
using Embedded6 = std::array<double, 6>;

inline Embedded6 box_embedding(const ManifoldModel& model, const PhaseState& s) {
  switch (model.kind) {
    case ModelKind::RoundSphere2: return {s.x.x(), s.x.y(), s.x.z(), s.xi.x(), s.xi.y(), s.xi.z()};
    case ModelKind::FlatTorus2:
      return {std::cos(s.x.x()), std::sin(s.x.x()), std::cos(s.x.y()), std::sin(s.x.y()), s.xi.x(), s.xi.y()};
    case ModelKind::EuclideanPlane2: return {s.x.x(), s.x.y(), s.xi.x(), s.xi.y(), 0.0, 0.0};
  }
  return {};
}

}  // namespace eigenlab

#endif  // EIGENLAB_GEOMETRY_HPP
