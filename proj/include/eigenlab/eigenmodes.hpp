#ifndef EIGENLAB_EIGENMODES_HPP
#define EIGENLAB_EIGENMODES_HPP

// Closed-form eigenfunction families.
//
// Sphere families are stored as coefficient vectors over the orthonormal basis
// Y_k^m(r, theta) = Pbar_k^m(cos r) e^{i m theta} (Condon-Shortley phase) in the
// standard polar chart (pole e3). A scalar `scale` carries any normalization
// applied afterwards; the raw expansion of every family is already unit-L2.

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "eigenlab/common.hpp"
#include "eigenlab/geometry.hpp"
#include "eigenlab/quadrature.hpp"

namespace eigenlab {

inline constexpr double kQuadTol = 1e-8;

// --- associated Legendre ----------------------------------------------------

// Fully normalized Pbar_k^m(cos r) for 0 <= m <= k, so that Pbar e^{i m theta}
// has unit L2 norm on the unit sphere. sin^m r is carried in the log domain and
// the upward recurrence in degree is rescaled, so large k never overflows.
inline double legendre_normalized(int k, int m, double x, double s) {
  if (m < 0 || m > k) return 0.0;
  if (m > 0 && s <= 0.0) return 0.0;
  double log_pmm = 0.5 * std::log(1.0 / (4.0 * kPi));
  for (int i = 1; i <= m; ++i) log_pmm += 0.5 * std::log((2.0 * i + 1.0) / (2.0 * i));
  if (m > 0) log_pmm += m * std::log(s);
  const double sign = (m % 2) ? -1.0 : 1.0;

  double prev = 0.0, cur = 1.0, log_scale = 0.0;
  double a_prev = 1.0;
  for (int l = m + 1; l <= k; ++l) {
    const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
    const double next = a * (x * cur - (l == m + 1 ? 0.0 : prev / a_prev));
    prev = cur;
    cur = next;
    a_prev = a;
    if (std::abs(cur) > 1e200) {
      cur *= 1e-200;
      prev *= 1e-200;
      log_scale += 200.0 * std::log(10.0);
    }
  }
  if (cur == 0.0) return 0.0;
  const double lg = std::log(std::abs(cur)) + log_scale + log_pmm;
  if (lg < -745.0) return 0.0;
  return sign * (cur < 0 ? -1.0 : 1.0) * std::exp(lg);
}

// Pbar_k^m(cos r) for all m = 0..k at one polar radius, O(k^2).
inline std::vector<double> legendre_normalized_all(int k, double r) {
  std::vector<double> out(static_cast<std::size_t>(k) + 1);
  const double x = std::cos(r), s = std::sin(r);
  for (int m = 0; m <= k; ++m) out[m] = legendre_normalized(k, m, x, std::abs(s));
  return out;
}

// --- families -------------------------------------------------------------

enum class FamilyKind { Zonal, HighestWeight, TorusWave, SphereRandomWave, OscillatorMode };

inline std::string to_string(FamilyKind f) {
  switch (f) {
    case FamilyKind::Zonal: return "zonal";
    case FamilyKind::HighestWeight: return "highest-weight";
    case FamilyKind::TorusWave: return "torus-wave";
    case FamilyKind::SphereRandomWave: return "random-wave";
    case FamilyKind::OscillatorMode: return "oscillator";
  }
  return "?";
}

inline FamilyKind family_from_string(const std::string& s) {
  if (s == "zonal") return FamilyKind::Zonal;
  if (s == "highest-weight" || s == "scar") return FamilyKind::HighestWeight;
  if (s == "torus-wave" || s == "torus") return FamilyKind::TorusWave;
  if (s == "random-wave" || s == "random") return FamilyKind::SphereRandomWave;
  if (s == "oscillator") return FamilyKind::OscillatorMode;
  throw ConfigError("unknown family '" + s + "'");
}

struct Eigenfunction {
  FamilyKind family = FamilyKind::Zonal;
  int k = 0;                                   // sphere degree; max frequency component on the torus
  Eigen::Vector2i kvec = Eigen::Vector2i::Zero();  // torus frequency
  std::uint64_t seed = 0;                      // random waves
  int n = 0, m = 0;                            // oscillator quantum numbers
  double lambda = 0.0;
  double h = 0.0;
  double scale = 1.0;
  std::vector<cplx> coeffs;  // sphere: coefficient of Y_k^m at index m + k

  bool on_sphere() const {
    return family == FamilyKind::Zonal || family == FamilyKind::HighestWeight ||
           family == FamilyKind::SphereRandomWave;
  }

  ManifoldModel model() const {
    if (on_sphere()) return ManifoldModel::round_sphere();
    if (family == FamilyKind::TorusWave) return ManifoldModel::flat_torus();
    return ManifoldModel::euclidean_plane();
  }

  std::string tag() const {
    switch (family) {
      case FamilyKind::TorusWave:
        return "torus-wave(" + std::to_string(kvec.x()) + "," + std::to_string(kvec.y()) + ")";
      case FamilyKind::SphereRandomWave:
        return "random-wave(" + std::to_string(k) + ",seed=" + std::to_string(seed) + ")";
      case FamilyKind::OscillatorMode:
        return "oscillator(" + std::to_string(n) + "," + std::to_string(m) + ")";
      default: return to_string(family) + "(" + std::to_string(k) + ")";
    }
  }

  // Multiplier in front of the family's textbook formula.
  double norm_constant() const {
    switch (family) {
      case FamilyKind::Zonal: return scale * std::sqrt((2.0 * k + 1.0) / (4.0 * kPi));
      case FamilyKind::HighestWeight: return scale * std::abs(legendre_normalized(k, k, 0.0, 1.0));
      case FamilyKind::TorusWave: return scale / kTwoPi;
      default: return scale;
    }
  }

  Eigenfunction scaled(double c) const {
    Eigenfunction u = *this;
    u.scale *= c;
    return u;
  }
};

inline Eigenfunction sphere_family(FamilyKind f, int k) {
  if (k < 0) throw DegreeOverflow("negative degree");
  Eigenfunction u;
  u.family = f;
  u.k = k;
  u.lambda = std::sqrt(static_cast<double>(k) * (k + 1.0));
  u.h = k > 0 ? 1.0 / k : std::numeric_limits<double>::infinity();
  u.coeffs.assign(2 * static_cast<std::size_t>(k) + 1, cplx(0.0));
  return u;
}

inline Eigenfunction zonal(int k) {
  Eigenfunction u = sphere_family(FamilyKind::Zonal, k);
  u.coeffs[k] = 1.0;
  return u;
}

// c_k sin^k r e^{ik theta} = (-1)^k Y_k^k.
inline Eigenfunction highest_weight(int k) {
  Eigenfunction u = sphere_family(FamilyKind::HighestWeight, k);
  u.coeffs[2 * k] = (k % 2) ? -1.0 : 1.0;
  return u;
}

inline Eigenfunction torus_wave(const Eigen::Vector2i& kvec) {
  if (kvec.isZero()) throw ConfigError("torus wave needs a nonzero frequency");
  Eigenfunction u;
  u.family = FamilyKind::TorusWave;
  u.kvec = kvec;
  u.k = std::max(std::abs(kvec.x()), std::abs(kvec.y()));
  u.lambda = kvec.cast<double>().norm();
  u.h = 1.0 / u.lambda;
  return u;
}

// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Gaussian combination of the degree-k harmonics, coefficients renormalized to
// unit l2 so the function has unit L2 norm.
inline Eigenfunction random_wave(int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("random wave needs k >= 1");
  Eigenfunction u = sphere_family(FamilyKind::SphereRandomWave, k);
  u.seed = seed;
  SplitMix64 gen(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  for (auto& c : u.coeffs) {
    const double re = normal(gen);
    const double im = normal(gen);
    c = cplx(re, im);
  }
  std::vector<double> sq(u.coeffs.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = std::norm(u.coeffs[i]);
  const double norm = std::sqrt(pairwise_sum(sq));
  for (auto& c : u.coeffs) c /= norm;
  return u;
}

// Mode of -h^2 Delta + |x|^2 on the plane with eigenvalue 2h(2n + |m| + 1).
inline Eigenfunction oscillator_family(int n, int m, double h) {
  if (n < 0 || !(h > 0)) throw LadderMismatch("oscillator needs n >= 0 and h > 0");
  Eigenfunction u;
  u.family = FamilyKind::OscillatorMode;
  u.n = n;
  u.m = m;
  u.h = h;
  u.lambda = 1.0 / h;
  return u;
}

// --- pointwise evaluation -------------------------------------------------

// Normalized zonal value through the three-term recurrence for P_k.
inline double eval_zonal_legendre(int k, double r) {
  const double x = std::cos(r);
  double p0 = 1.0, p1 = x;
  if (k == 0) p1 = 1.0;
  for (int l = 2; l <= k; ++l) {
    const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt((2.0 * k + 1.0) / (4.0 * kPi)) * p1;
}

// Normalized zonal value through the Laplace integral
// (1/2pi) int (cos r + i sin r cos tau)^k dtau, trapezoid rule in tau.
inline double eval_zonal_integral(int k, double r, int nquad) {
  if (k < 0) throw DegreeOverflow("negative degree");
  if (nquad < 4 * k + 16) throw Underresolved("nquad below 4k + 16");
  const double c = std::cos(r), s = std::sin(r);
  std::vector<cplx> terms(static_cast<std::size_t>(nquad));
  for (int j = 0; j < nquad; ++j) {
    const cplx z(c, s * std::cos(kTwoPi * j / nquad));
    const double mod = std::abs(z);
    if (k == 0 || mod == 0.0) {
      terms[j] = k == 0 ? cplx(1.0) : cplx(0.0);
      continue;
    }
    const double log_mod = k * std::log(mod);
    if (!std::isfinite(log_mod) || log_mod > 700.0) throw DegreeOverflow("|z|^k not representable");
    terms[j] = std::polar(std::exp(log_mod), k * std::arg(z));
  }
  const cplx avg = pairwise_sum(terms) / static_cast<double>(nquad);
  if (std::abs(avg.imag()) > 1e-12 * std::max(1.0, std::abs(avg.real())) + 1e-12)
    throw NoConvergence("zonal integral has an imaginary residue");
  return std::sqrt((2.0 * k + 1.0) / (4.0 * kPi)) * avg.real();
}

// c_k^{-2} = 2pi int_0^pi sin^{2k+1} r dr = 2pi sqrt(pi) Gamma(k+1) / Gamma(k+3/2).
inline double highest_weight_constant(int k) {
  const double log_int = std::log(kTwoPi) + 0.5 * std::log(kPi) + std::lgamma(k + 1.0) - std::lgamma(k + 1.5);
  return std::exp(-0.5 * log_int);
}

inline cplx eval_highest_weight(int k, const Vec2& x) {
  if (!(x.x() >= 0.0 && x.x() <= kPi)) throw ChartViolation("polar radius outside [0, pi]");
  const double s = std::sin(x.x());
  if (s <= 0.0) return 0.0;
  const double mag = std::exp(std::log(highest_weight_constant(k)) + k * std::log(s));
  return std::polar(mag, k * x.y());
}

inline cplx eval_torus_wave(const Eigen::Vector2i& kvec, const Vec2& x) {
  if (kvec.isZero()) throw ConfigError("torus wave needs a nonzero frequency");
  return std::polar(1.0 / kTwoPi, kvec.x() * x.x() + kvec.y() * x.y());
}

// Coefficients a_m(r) of u(r, theta) = sum_m a_m(r) e^{i m theta}, index m + k.
inline std::vector<cplx> sphere_row(const Eigenfunction& u, double r) {
  const int k = u.k;
  std::vector<cplx> a(u.coeffs.size(), cplx(0.0));
  const double x = std::cos(r), s = std::abs(std::sin(r));
  for (int m = -k; m <= k; ++m) {
    const cplx c = u.coeffs[m + k];
    if (c == cplx(0.0)) continue;
    const int am = std::abs(m);
    double p = legendre_normalized(k, am, x, s);
    if (m < 0 && (am % 2)) p = -p;  // Y_k^{-m} = (-1)^m conj(Y_k^m)
    a[m + k] = u.scale * c * p;
  }
  return a;
}

inline cplx sum_row(const std::vector<cplx>& a, int k, double theta) {
  cplx acc = 0.0;
  for (int m = -k; m <= k; ++m)
    if (a[m + k] != cplx(0.0)) acc += a[m + k] * std::polar(1.0, m * theta);
  return acc;
}

inline cplx eval_random_wave(int k, std::uint64_t seed, const Vec2& x) {
  const Eigenfunction u = random_wave(k, seed);
  return sum_row(sphere_row(u, x.x()), k, x.y());
}

namespace detail {

// log of |L_n^alpha(x)| and its sign, by the upward recurrence with rescaling.
inline std::pair<double, double> log_laguerre(int n, double alpha, double x) {
  double prev = 1.0, cur = 1.0 + alpha - x, log_scale = 0.0;
  if (n == 0) return {0.0, 1.0};
  for (int j = 1; j < n; ++j) {
    const double next = ((2.0 * j + 1.0 + alpha - x) * cur - (j + alpha) * prev) / (j + 1.0);
    prev = cur;
    cur = next;
    if (std::abs(cur) > 1e200) {
      cur *= 1e-200;
      prev *= 1e-200;
      log_scale += 200.0 * std::log(10.0);
    }
  }
  if (cur == 0.0) return {-std::numeric_limits<double>::infinity(), 1.0};
  return {std::log(std::abs(cur)) + log_scale, cur < 0 ? -1.0 : 1.0};
}

}  // namespace detail

// u(x) = h^{-1/2} psi(x / sqrt(h)),
// psi = sqrt(n! / (pi (n+|m|)!)) rho^|m| L_n^|m|(rho^2) e^{-rho^2/2} e^{i m theta}.
inline cplx eval_oscillator(int n, int m, double h, const Vec2& x) {
  const int am = std::abs(m);
  const double rho2 = x.squaredNorm() / h;
  const auto [log_l, sign] = detail::log_laguerre(n, am, rho2);
  double lg = 0.5 * (std::lgamma(n + 1.0) - std::lgamma(n + am + 1.0) - std::log(kPi)) - 0.5 * std::log(h) -
              0.5 * rho2 + log_l;
  if (am > 0) {
    if (rho2 == 0.0) return 0.0;
    lg += 0.5 * am * std::log(rho2);
  }
  if (lg < -745.0) return 0.0;
  return std::polar(sign * std::exp(lg), m * std::atan2(x.y(), x.x()));
}

// Value at a chart point of the family's own chart (sphere: polar about e3).
inline cplx evaluate(const Eigenfunction& u, const Vec2& x) {
  switch (u.family) {
    case FamilyKind::Zonal: return u.scale * eval_zonal_legendre(u.k, x.x());
    case FamilyKind::HighestWeight:
    case FamilyKind::SphereRandomWave: return sum_row(sphere_row(u, x.x()), u.k, x.y());
    case FamilyKind::TorusWave: return u.scale * eval_torus_wave(u.kvec, x);
    case FamilyKind::OscillatorMode: return u.scale * eval_oscillator(u.n, u.m, u.h, x);
  }
  return 0.0;
}

// Value at a chart-free base point.
inline cplx evaluate(const Eigenfunction& u, const Vec3& X) {
  if (u.on_sphere()) return evaluate(u, Vec2(std::atan2(std::hypot(X.x(), X.y()), X.z()), std::atan2(X.y(), X.x())));
  return evaluate(u, Vec2(X.x(), X.y()));
}

// Tabulated sphere evaluation: a_m(r) on a uniform radial lattice with cubic
// interpolation, then the theta sum. Spacing 0.04/k keeps the interpolation
// error near 1e-6 relative.
class SphereTable {
 public:
  SphereTable() = default;
  explicit SphereTable(const Eigenfunction& u, double r_lo = 0.0, double r_hi = kPi) : k_(u.k) {
    for (int m = -u.k; m <= u.k; ++m)
      if (u.coeffs[m + u.k] != cplx(0.0)) modes_.push_back(m);
    const double dr_target = 0.04 / std::max(1, u.k);
    r_lo_ = std::max(0.0, r_lo);
    r_hi_ = std::min(kPi, r_hi);
    nodes_ = static_cast<int>(std::ceil((r_hi_ - r_lo_) / dr_target)) + 1;
    nodes_ = std::max(nodes_, 4);
    dr_ = (r_hi_ - r_lo_) / (nodes_ - 1);
    values_.assign(static_cast<std::size_t>(nodes_) * modes_.size(), cplx(0.0));
    parallel_for(static_cast<std::size_t>(nodes_), [&](std::size_t j) {
      const double r = r_lo_ + dr_ * static_cast<double>(j);
      const double x = std::cos(r), s = std::abs(std::sin(r));
      for (std::size_t q = 0; q < modes_.size(); ++q) {
        const int m = modes_[q], am = std::abs(m);
        double p = legendre_normalized(u.k, am, x, s);
        if (m < 0 && (am % 2)) p = -p;
        values_[j * modes_.size() + q] = u.scale * u.coeffs[m + u.k] * p;
      }
    });
  }

  const std::vector<int>& modes() const { return modes_; }

  // Interpolated a_m(r) into `out` (size modes().size()).
  void row(double r, cplx* out) const {
    double f = (r - r_lo_) / dr_;
    f = std::clamp(f, 0.0, static_cast<double>(nodes_ - 1));
    int j = static_cast<int>(std::floor(f));
    j = std::clamp(j, 1, nodes_ - 3);
    const double t = f - j;
    // Catmull-Rom weights on nodes j-1 .. j+2
    const double w0 = ((-t + 2.0) * t - 1.0) * t * 0.5;
    const double w1 = ((3.0 * t - 5.0) * t * t + 2.0) * 0.5;
    const double w2 = ((-3.0 * t + 4.0) * t + 1.0) * t * 0.5;
    const double w3 = ((t - 1.0) * t * t) * 0.5;
    const std::size_t nm = modes_.size();
    const cplx* v = values_.data() + static_cast<std::size_t>(j - 1) * nm;
    for (std::size_t q = 0; q < nm; ++q) out[q] = w0 * v[q] + w1 * v[nm + q] + w2 * v[2 * nm + q] + w3 * v[3 * nm + q];
  }

  cplx operator()(double r, double theta) const {
    const std::size_t nm = modes_.size();
    cplx buf[8];
    std::vector<cplx> heap;
    cplx* a = buf;
    if (nm > 8) {
      heap.resize(nm);
      a = heap.data();
    }
    row(r, a);
    if (nm == 1) return a[0] * std::polar(1.0, modes_[0] * theta);
    // e^{i m theta} by repeated multiplication from m = -k
    const cplx step = std::polar(1.0, theta);
    cplx phase = std::polar(1.0, -k_ * theta);
    cplx acc = 0.0;
    std::size_t q = 0;
    for (int m = -k_; m <= k_ && q < nm; ++m, phase *= step)
      if (modes_[q] == m) acc += a[q++] * phase;
    return acc;
  }

  cplx operator()(const Vec3& X) const {
    return (*this)(std::atan2(std::hypot(X.x(), X.y()), X.z()), std::atan2(X.y(), X.x()));
  }

 private:
  int k_ = 0;
  std::vector<int> modes_;
  double r_lo_ = 0.0, r_hi_ = kPi, dr_ = 1.0;
  int nodes_ = 0;
  std::vector<cplx> values_;
};

// --- evaluation grids -------------------------------------------------------

enum class GridLayout { SphereGauss, SphereLatLon, Torus, PlaneUniform, PlanePolar };

// Tensor-product quadrature grid: node (i, j) = (axis1[i], axis2[j]) with weight
// w1[i] * w2[j]. Axis 1 is r / x1 / radius; axis 2 is theta / x2 / angle.
struct EvalGrid {
  GridLayout layout = GridLayout::SphereGauss;
  ManifoldModel model;
  std::vector<double> axis1, w1, axis2, w2;
  double extent = 0.0;  // plane half width or radius

  std::size_t rows() const { return axis1.size(); }
  std::size_t cols() const { return axis2.size(); }
  std::size_t size() const { return rows() * cols(); }

  // Chart point of node (i, j); plane polar nodes are returned in Cartesian form.
  Vec2 node(std::size_t i, std::size_t j) const {
    if (layout == GridLayout::PlanePolar)
      return {axis1[i] * std::cos(axis2[j]), axis1[i] * std::sin(axis2[j])};
    return {axis1[i], axis2[j]};
  }
  double weight(std::size_t i, std::size_t j) const { return w1[i] * w2[j]; }

  double total_weight() const {
    std::vector<double> a(w1), b(w2);
    return pairwise_sum(a) * pairwise_sum(b);
  }

  static EvalGrid uniform_angle(std::size_t n, std::vector<double>& axis, std::vector<double>& w) {
    axis.resize(n);
    w.assign(n, kTwoPi / static_cast<double>(n));
    for (std::size_t j = 0; j < n; ++j) axis[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    return {};
  }

  // Gauss-Legendre in cos r times uniform theta; exact for band limit < min(2 nr, ntheta).
  static EvalGrid sphere_gauss(std::size_t nr, std::size_t ntheta) {
    EvalGrid g;
    g.layout = GridLayout::SphereGauss;
    const GaussLegendre& gl = gauss_legendre(static_cast<unsigned>(nr));
    for (std::size_t i = nr; i-- > 0;) {  // ascending r
      g.axis1.push_back(std::acos(gl.nodes[i]));
      g.w1.push_back(gl.weights[i]);
    }
    uniform_angle(ntheta, g.axis2, g.w2);
    return g;
  }

  // Cell-centred rows over [r0, r1] with exact cell areas as weights.
  static EvalGrid sphere_latlon(std::size_t nr, std::size_t ntheta, double r0 = 0.0, double r1 = kPi) {
    EvalGrid g;
    g.layout = GridLayout::SphereLatLon;
    const double dr = (r1 - r0) / static_cast<double>(nr);
    for (std::size_t i = 0; i < nr; ++i) {
      const double a = r0 + dr * static_cast<double>(i);
      g.axis1.push_back(a + 0.5 * dr);
      g.w1.push_back(std::cos(a) - std::cos(a + dr));
    }
    uniform_angle(ntheta, g.axis2, g.w2);
    return g;
  }

  static EvalGrid torus(std::size_t n) {
    EvalGrid g;
    g.layout = GridLayout::Torus;
    g.model = ManifoldModel::flat_torus();
    uniform_angle(n, g.axis1, g.w1);
    uniform_angle(n, g.axis2, g.w2);
    return g;
  }

  static EvalGrid plane_uniform(std::size_t n, double half_width) {
    EvalGrid g;
    g.layout = GridLayout::PlaneUniform;
    g.model = ManifoldModel::euclidean_plane();
    g.extent = half_width;
    const double d = 2.0 * half_width / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      g.axis1.push_back(-half_width + (i + 0.5) * d);
      g.w1.push_back(d);
    }
    g.axis2 = g.axis1;
    g.w2 = g.w1;
    return g;
  }

  // Disc of the given radius: Gauss-Legendre in the radius, uniform angle.
  static EvalGrid plane_polar(std::size_t nr, std::size_t ntheta, double radius) {
    EvalGrid g;
    g.layout = GridLayout::PlanePolar;
    g.model = ManifoldModel::euclidean_plane();
    g.extent = radius;
    const GaussLegendre gl = gauss_legendre(static_cast<unsigned>(nr), 0.0, radius);
    g.axis1 = gl.nodes;
    g.w1 = gl.weights;
    for (std::size_t i = 0; i < nr; ++i) g.w1[i] *= g.axis1[i];
    uniform_angle(ntheta, g.axis2, g.w2);
    return g;
  }

  EvalGrid refined() const {
    switch (layout) {
      case GridLayout::SphereGauss: return sphere_gauss(2 * rows(), 2 * cols());
      case GridLayout::SphereLatLon: {
        const double dr = axis1.size() > 1 ? axis1[1] - axis1[0] : kPi;
        return sphere_latlon(2 * rows(), 2 * cols(), axis1.front() - 0.5 * dr, axis1.back() + 0.5 * dr);
      }
      case GridLayout::Torus: return torus(2 * rows());
      case GridLayout::PlaneUniform: return plane_uniform(2 * rows(), extent);
      case GridLayout::PlanePolar: return plane_polar(2 * rows(), 2 * cols(), extent);
    }
    return *this;
  }
};

// Grid whose quadrature is exact for |u|^2 of the given eigenfunction.
inline EvalGrid default_grid(const Eigenfunction& u) {
  switch (u.family) {
    case FamilyKind::TorusWave: {
      const int kmax = std::max(std::abs(u.kvec.x()), std::abs(u.kvec.y()));
      return EvalGrid::torus(static_cast<std::size_t>(2 * kmax + 4));
    }
    case FamilyKind::OscillatorMode: {
      // support essentially inside |x|^2 <= 2 E_n with E_n = 2h(2n+|m|+1)
      const double radius = std::sqrt(4.0 * u.h * (2 * u.n + std::abs(u.m) + 1)) + 12.0 * std::sqrt(u.h);
      const std::size_t nr = static_cast<std::size_t>(std::ceil(2.0 * radius / u.h)) + 32;
      return EvalGrid::plane_polar(nr, static_cast<std::size_t>(2 * std::abs(u.m) + 8), radius);
    }
    default: return EvalGrid::sphere_gauss(static_cast<std::size_t>(u.k + 2), static_cast<std::size_t>(2 * u.k + 4));
  }
}

// |u|^2 integrated over the grid; rows are reduced in a fixed order.
inline double l2_norm_squared(const Eigenfunction& u, const EvalGrid& grid) {
  std::vector<double> row_sums(grid.rows());
  parallel_for(grid.rows(), [&](std::size_t i) {
    std::vector<double> terms(grid.cols());
    if (u.on_sphere()) {
      const std::vector<cplx> a = sphere_row(u, grid.axis1[i]);
      for (std::size_t j = 0; j < grid.cols(); ++j)
        terms[j] = std::norm(sum_row(a, u.k, grid.axis2[j])) * grid.w2[j];
    } else {
      for (std::size_t j = 0; j < grid.cols(); ++j) terms[j] = std::norm(evaluate(u, grid.node(i, j))) * grid.w2[j];
    }
    row_sums[i] = pairwise_sum(terms) * grid.w1[i];
  });
  return pairwise_sum(row_sums);
}

// Divides by the grid norm after checking it against one refinement.
inline Eigenfunction l2_normalize(const Eigenfunction& u, const EvalGrid& grid, double quad_tol = kQuadTol) {
  const double n0 = std::sqrt(l2_norm_squared(u, grid));
  const double n1 = std::sqrt(l2_norm_squared(u, grid.refined()));
  if (!(n0 > 0)) throw QuadratureTooCoarse("zero norm on grid");
  if (std::abs(n1 - n0) > quad_tol * std::max(1.0, n1))
    throw QuadratureTooCoarse("norm moved by " + std::to_string(std::abs(n1 - n0)) + " under refinement");
  return u.scaled(1.0 / n0);
}

inline Eigenfunction l2_normalize(const Eigenfunction& u) { return l2_normalize(u, default_grid(u)); }

}  // namespace eigenlab

#endif  // EIGENLAB_EIGENMODES_HPP
