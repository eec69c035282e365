#ifndef EIGENLAB_FLOWOUT_HPP
#define EIGENLAB_FLOWOUT_HPP

// Flow-outs of a cosphere fiber, their time annuli, restriction of measure
// supports to them, and box-counting proxies for Hausdorff content.

#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eigenlab/common.hpp"
#include "eigenlab/geometry.hpp"
#include "eigenlab/microlocal.hpp"

namespace eigenlab {

using FlowMap = std::function<PhaseState(const PhaseState&, double)>;
using EmbedMap = std::function<Embedded6(const PhaseState&)>;

// Samples G_t(z_i) on a (direction, time) lattice. Samples are generated on
// demand, so even 10^7-point lattices cost no memory.
struct FlowOutSet {
  ManifoldModel model;
  Vec3 base = Vec3::Zero();
  double T = 0.0;
  std::vector<PhaseState> fiber;  // initial covectors, one per direction
  std::vector<double> times;      // uniform on [-T, T], always contains 0
  FlowMap flow;
  EmbedMap embed;

  int ndirs() const { return static_cast<int>(fiber.size()); }
  int ntimes() const { return static_cast<int>(times.size()); }
  std::size_t size() const { return fiber.size() * times.size(); }
  PhaseState sample(int dir, int time) const { return flow(fiber[dir], times[time]); }
  int zero_row() const { return ntimes() / 2; }

  // Largest lattice step in the embedding (direction step times the maximal
  // fiber speed, time step times the flow speed).
  double sample_spacing() const {
    const double dpsi = kTwoPi / ndirs();
    const double dt = times.size() > 1 ? times[1] - times[0] : 0.0;
    double speed = 0.0;
    for (int i = 0; i < std::min(ndirs(), 8); ++i)
      speed = std::max(speed, std::hypot(fiber[i].xi.norm(), 1.0));
    return std::max(dpsi * speed, dt * std::sqrt(2.0) * speed);
  }
};

namespace detail {

// Odd-length lattice so that t = 0 is a node.
inline std::vector<double> symmetric_times(double T, int ntimes) {
  const int n = ntimes | 1;
  std::vector<double> t(n);
  for (int j = 0; j < n; ++j) t[j] = -T + 2.0 * T * j / (n - 1);
  t[n / 2] = 0.0;
  return t;
}

}  // namespace detail

inline FlowMap geodesic_flow_map(const ManifoldModel& model, bool integrate = false, double tol = 1e-10) {
  if (integrate) return [model, tol](const PhaseState& z, double t) { return flow_state(model, z, t, tol); };
  return [model](const PhaseState& z, double t) { return flow_closed_form(model, z, t); };
}

inline EmbedMap model_embedding(const ManifoldModel& model) {
  return [model](const PhaseState& z) { return box_embedding(model, z); };
}

// Lambda_{x,T}: ndirs unit covectors at the base point flowed over a uniform
// [-T, T] lattice. The exact flow is used by default; `integrate` switches to
// the symplectic integrator (which re-charts internally, so poles are fine).
inline FlowOutSet build_flowout_at(const ManifoldModel& model, const Vec3& base, double T, int ndirs, int ntimes,
                                   bool integrate = false) {
  if (!(T > 0)) throw BadWindow("flow-out horizon must be positive");
  if (ndirs < 64 || ntimes < 64) throw InsufficientSamples("flow-out lattice needs ndirs, ntimes >= 64");
  if (ndirs % 4) throw ConfigError("ndirs must be a multiple of 4");
  FlowOutSet fo;
  fo.model = model;
  fo.base = base;
  fo.T = T;
  fo.fiber.resize(ndirs);
  for (int i = 0; i < ndirs; ++i) fo.fiber[i] = unit_state(model, base, kTwoPi * i / ndirs);
  fo.times = detail::symmetric_times(T, ntimes);
  fo.flow = geodesic_flow_map(model, integrate);
  fo.embed = model_embedding(model);
  return fo;
}

// Chart-point form; a base exactly at a chart pole is accepted since the fiber
// is built chart-free.
inline FlowOutSet build_flowout(const ManifoldModel& model, const Vec2& x, double T, int ndirs, int ntimes,
                                bool integrate = false) {
  if (!std::isfinite(x.x()) || !std::isfinite(x.y())) throw ChartViolation("non-finite base point");
  return build_flowout_at(model, embed_base(model, x), T, ndirs, ntimes, integrate);
}

// A_x(d1, d2): lattice times with d1 <= |t| <= d2.
struct Annulus {
  const FlowOutSet* parent = nullptr;
  double d1 = 0.0, d2 = 0.0;
  std::vector<int> time_index;

  std::size_t size() const { return time_index.size() * static_cast<std::size_t>(parent->ndirs()); }
  PhaseState sample(int dir, int q) const { return parent->sample(dir, time_index[q]); }
};

inline Annulus annulus(const FlowOutSet& fo, double d1, double d2) {
  if (!(d1 > 0 && d1 < d2 && d2 <= fo.T * (1.0 + 1e-12)))
    throw BadWindow("annulus needs 0 < d1 < d2 <= T");
  Annulus a;
  a.parent = &fo;
  a.d1 = d1;
  a.d2 = d2;
  const double eps = 1e-12 * fo.T;
  for (int j = 0; j < fo.ntimes(); ++j) {
    const double t = std::abs(fo.times[j]);
    if (t >= d1 - eps && t <= d2 + eps) a.time_index.push_back(j);
  }
  if (a.time_index.empty()) throw BadWindow("annulus contains no lattice time");
  return a;
}

// --- box counting -----------------------------------------------------------

inline constexpr double kMinScale = 0.02;
inline constexpr double kMaxScale = 0.5;

inline const std::vector<double>& default_scales() {
  static const std::vector<double> s{0.2, 0.1, 0.05, 0.025};
  return s;
}

namespace detail {

inline void check_scale(double eps) {
  if (!(eps >= kMinScale - 1e-15 && eps <= kMaxScale + 1e-15))
    throw ScaleOutOfRange("scale " + std::to_string(eps) + " outside [0.02, 0.5]");
}

// Packs the six lattice indices into 10-bit fields.
inline std::uint64_t box_key(const Embedded6& e, double eps) {
  std::uint64_t key = 0;
  for (double c : e) {
    const double f = std::floor(c / eps);
    if (!(std::abs(f) < 511.0)) throw ScaleOutOfRange("embedded coordinate outside box lattice");
    key = (key << 10) | static_cast<std::uint64_t>(static_cast<long>(f) + 512);
  }
  return key;
}

}  // namespace detail

// Occupied boxes for a whole scale ladder, filled point by point.
class CoverAccumulator {
 public:
  explicit CoverAccumulator(std::vector<double> scales) : scales_(std::move(scales)), boxes_(scales_.size()) {
    for (double e : scales_) detail::check_scale(e);
  }
  void add(const Embedded6& e) {
    for (std::size_t s = 0; s < scales_.size(); ++s) boxes_[s].insert(detail::box_key(e, scales_[s]));
    ++points_;
  }
  void merge(const CoverAccumulator& other) {
    for (std::size_t s = 0; s < scales_.size(); ++s) boxes_[s].insert(other.boxes_[s].begin(), other.boxes_[s].end());
    points_ += other.points_;
  }
  const std::vector<double>& scales() const { return scales_; }
  std::size_t count(std::size_t s) const { return boxes_[s].size(); }
  std::size_t points() const { return points_; }

 private:
  std::vector<double> scales_;
  std::vector<std::unordered_set<std::uint64_t>> boxes_;
  std::size_t points_ = 0;
};

inline std::size_t box_count(const std::vector<Embedded6>& points, double eps) {
  detail::check_scale(eps);
  std::unordered_set<std::uint64_t> boxes;
  for (const auto& p : points) boxes.insert(detail::box_key(p, eps));
  return boxes.size();
}

inline std::size_t box_count(const ManifoldModel& model, const std::vector<PhaseState>& points, double eps) {
  for (const auto& p : points)
    if (!on_unit_shell(p, 1e-6)) throw ShellViolation("box counting expects unit-shell points");
  std::vector<Embedded6> e;
  e.reserve(points.size());
  for (const auto& p : points) e.push_back(box_embedding(model, p));
  return box_count(e, eps);
}

struct CoverReport {
  std::vector<double> scales;
  std::vector<std::size_t> counts;
  std::vector<double> proxies;
  int n = 2;
  double dim_estimate = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

inline CoverReport make_report(const CoverAccumulator& acc, int n = 2) {
  const auto& sc = acc.scales();
  if (sc.size() < 4) throw InsufficientSamples("cover ladder needs at least 4 scales");
  const double span = *std::max_element(sc.begin(), sc.end()) / *std::min_element(sc.begin(), sc.end());
  if (span < 8.0 - 1e-9) throw ScaleOutOfRange("cover ladder must span a factor of at least 8");
  CoverReport r;
  r.scales = sc;
  r.n = n;
  r.points = acc.points();
  std::vector<double> lx, ly;
  for (std::size_t s = 0; s < sc.size(); ++s) {
    r.counts.push_back(acc.count(s));
    r.proxies.push_back(static_cast<double>(acc.count(s)) * std::pow(sc[s], n));
    if (acc.count(s) > 0) {
      lx.push_back(std::log(1.0 / sc[s]));
      ly.push_back(std::log(static_cast<double>(acc.count(s))));
    }
  }
  if (lx.size() >= 2) {
    const LineFit f = fit_line(lx, ly);
    r.dim_estimate = f.slope;
    r.r2 = f.r2;
  }
  return r;
}

inline CoverReport hausdorff_proxy(const std::vector<Embedded6>& points, const std::vector<double>& scales = default_scales(),
                                   int n = 2) {
  CoverAccumulator acc(scales);
  for (const auto& p : points) acc.add(p);
  return make_report(acc, n);
}

inline CoverReport hausdorff_proxy(const ManifoldModel& model, const std::vector<PhaseState>& points,
                                   const std::vector<double>& scales = default_scales(), int n = 2) {
  std::vector<Embedded6> e;
  e.reserve(points.size());
  for (const auto& p : points) e.push_back(box_embedding(model, p));
  return hausdorff_proxy(e, scales, n);
}

// Cover of the annulus samples along the listed directions, computed in parallel
// per direction block and merged (set union, so the result is order-free).
inline CoverReport cover_directions(const Annulus& ann, const std::vector<int>& dirs,
                                    const std::vector<double>& scales = default_scales(), int n = 2) {
  const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(thread_count(), dirs.size()));
  std::vector<CoverAccumulator> parts(blocks, CoverAccumulator(scales));
  parallel_for(blocks, [&](std::size_t b) {
    for (std::size_t d = b; d < dirs.size(); d += blocks)
      for (std::size_t q = 0; q < ann.time_index.size(); ++q)
        parts[b].add(ann.parent->embed(ann.sample(dirs[d], static_cast<int>(q))));
  });
  CoverAccumulator all(scales);
  for (const auto& p : parts) all.merge(p);
  return make_report(all, n);
}

inline CoverReport cover_annulus(const Annulus& ann, const std::vector<double>& scales = default_scales(), int n = 2) {
  std::vector<int> dirs(ann.parent->ndirs());
  for (int i = 0; i < ann.parent->ndirs(); ++i) dirs[i] = i;
  return cover_directions(ann, dirs, scales, n);
}

// --- support restriction ----------------------------------------------------

// Support cell centers within Sasaki distance dist_tol of some annulus sample.
inline std::vector<PhaseState> restrict_support(const MeasureSupport& support, const Annulus& ann, double dist_tol) {
  const PhaseGrid& grid = support.lift->grid;
  const double need = 2.0 * std::max(grid.cell_diameter(), ann.parent->sample_spacing());
  if (dist_tol < need * (1.0 - 1e-9))
    throw ResolutionMismatch("dist_tol " + std::to_string(dist_tol) + " below twice the resolution " + std::to_string(need));
  const ManifoldModel& model = grid.model;
  const double cell = 2.0 * dist_tol;
  auto key_of = [&](const Embedded6& e, const std::array<int, 6>& shift) {
    std::uint64_t key = 0;
    for (int d = 0; d < 6; ++d) {
      const long f = static_cast<long>(std::floor(e[d] / cell)) + shift[d];
      key = (key << 10) | static_cast<std::uint64_t>(f + 512);
    }
    return key;
  };
  std::vector<PhaseState> centers;
  centers.reserve(support.cells.size());
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;
  const std::array<int, 6> zero{};
  for (std::size_t c : support.cells) {
    centers.push_back(grid.center(c));
    index[key_of(box_embedding(model, centers.back()), zero)].push_back(centers.size() - 1);
  }
  const std::size_t workers = std::max<std::size_t>(1, thread_count());
  std::vector<std::vector<char>> hit(workers, std::vector<char>(centers.size(), 0));
  const int nd = ann.parent->ndirs();
  parallel_for(workers, [&](std::size_t w) {
    for (int d = static_cast<int>(w); d < nd; d += static_cast<int>(workers))
      for (std::size_t q = 0; q < ann.time_index.size(); ++q) {
        const PhaseState s = ann.sample(d, static_cast<int>(q));
        const Embedded6 e = box_embedding(model, s);
        // a ball of radius dist_tol meets at most two cells of width 2 dist_tol per axis
        std::array<int, 6> lean{};
        for (int a = 0; a < 6; ++a) {
          const double f = e[a] / cell - std::floor(e[a] / cell);
          lean[a] = f < 0.5 ? -1 : 1;
        }
        for (int mask = 0; mask < 64; ++mask) {
          std::array<int, 6> shift{};
          for (int a = 0; a < 6; ++a) shift[a] = (mask >> a) & 1 ? lean[a] : 0;
          const auto it = index.find(key_of(e, shift));
          if (it == index.end()) continue;
          for (std::size_t c : it->second)
            if (!hit[w][c] && phase_distance(model, centers[c], s) <= dist_tol) hit[w][c] = 1;
        }
      }
  });
  std::vector<PhaseState> out;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    bool any = false;
    for (const auto& hv : hit) any = any || hv[c];
    if (any) out.push_back(centers[c]);
  }
  return out;
}

// Ridge restriction. Each flow-out direction gets a profile value: the mean
// Husimi density over a few annulus times. A direction is kept when its profile
// is significant (>= tau * max density of the lift) and it sits on a ridge of
// the profile, i.e. it is a local maximum or the profile is flat there on the
// sqrt(h) scale. The support is then sampled along the kept directions at the
// full annulus time resolution, so its thickness is not inflated by the
// sqrt(h) width of the coherent states.
struct RidgeOptions {
  int profile_dirs = 256;
  int profile_times = 8;
  double flat_eta = 0.05;
};

struct RidgeSupport {
  std::vector<int> directions;     // indices into the parent fiber
  std::vector<double> profile;     // coarse profile values
  double threshold = 0.0;          // tau * max density
  double profile_max = 0.0;
};

inline RidgeSupport ridge_directions(const HusimiProbe& probe, double max_density, const Annulus& ann, double tau,
                                     const RidgeOptions& opt = {}) {
  if (!(tau > 0 && tau < 1)) throw ConfigError("tau must lie in (0, 1)");
  const FlowOutSet& fo = *ann.parent;
  const int np = opt.profile_dirs;
  // profile times: evenly spread over the annulus time list
  std::vector<int> qs;
  const int nq = static_cast<int>(ann.time_index.size());
  for (int s = 0; s < opt.profile_times; ++s) qs.push_back(std::min(nq - 1, (2 * s + 1) * nq / (2 * opt.profile_times)));

  // fiber state for an arbitrary direction angle, interpolating the parent's fiber frame
  const PhaseState f0 = fo.fiber[0];
  const PhaseState fq = fo.fiber[fo.ndirs() / 4];  // direction pi/2
  auto fiber_at = [&](double psi) {
    return PhaseState{f0.x, std::cos(psi) * f0.xi + std::sin(psi) * fq.xi};
  };

  RidgeSupport rs;
  rs.profile.assign(np, 0.0);
  parallel_for(static_cast<std::size_t>(np), [&](std::size_t p) {
    const PhaseState z0 = fiber_at(kTwoPi * static_cast<double>(p) / np);
    std::vector<double> vals;
    for (int q : qs) vals.push_back(probe.density(fo.flow(z0, fo.times[ann.time_index[q]])));
    rs.profile[p] = pairwise_sum(vals) / static_cast<double>(vals.size());
  });
  rs.threshold = tau * max_density;
  rs.profile_max = *std::max_element(rs.profile.begin(), rs.profile.end());

  // periodic Catmull-Rom interpolation of the profile onto the parent's directions
  const int nd = fo.ndirs();
  const double dpsi = kTwoPi / np;
  std::vector<double> m(nd), dm(nd);
  for (int i = 0; i < nd; ++i) {
    const double f = static_cast<double>(i) * np / nd;
    const int j = static_cast<int>(std::floor(f));
    const double t = f - j;
    auto P = [&](int q) { return rs.profile[((q % np) + np) % np]; };
    const double p0 = P(j - 1), p1 = P(j), p2 = P(j + 1), p3 = P(j + 2);
    const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
    const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
    const double c = -0.5 * p0 + 0.5 * p2;
    m[i] = ((a * t + b) * t + c) * t + p1;
    dm[i] = ((3.0 * a * t + 2.0 * b) * t + c) / dpsi;
  }
  const double sqrt_h = std::sqrt(probe.h());
  for (int i = 0; i < nd; ++i) {
    if (!(m[i] >= rs.threshold) || m[i] <= 0) continue;
    const double left = m[(i + nd - 1) % nd], right = m[(i + 1) % nd];
    const bool peak = m[i] >= left && m[i] >= right;
    const bool flat = std::abs(dm[i]) / m[i] * sqrt_h <= opt.flat_eta;
    if (peak || flat) rs.directions.push_back(i);
  }
  return rs;
}

inline CoverReport ridge_cover(const HusimiProbe& probe, double max_density, const Annulus& ann, double tau,
                               const std::vector<double>& scales = default_scales(), const RidgeOptions& opt = {},
                               RidgeSupport* out = nullptr) {
  RidgeSupport rs = ridge_directions(probe, max_density, ann, tau, opt);
  CoverReport r = cover_directions(ann, rs.directions, scales);
  if (out) *out = std::move(rs);
  return r;
}

// --- verdicts ---------------------------------------------------------------

enum class Admissibility { Admissible, NotAdmissible, Inconclusive };

inline std::string to_string(Admissibility a) {
  switch (a) {
    case Admissibility::Admissible: return "Admissible";
    case Admissibility::NotAdmissible: return "NotAdmissible";
    case Admissibility::Inconclusive: return "Inconclusive";
  }
  return "?";
}

// Smallest-scale proxy cutoff between a unit circle (H^2 = 0) and a unit square
// (H^2 = 1) sampled densely in the box embedding: the geometric mean of the two.
inline double calibrated_proxy_cutoff(const std::vector<double>& scales = default_scales(), int n = 2) {
  const double eps = *std::min_element(scales.begin(), scales.end());
  detail::check_scale(eps);
  const int nc = 10000;
  std::vector<Embedded6> circle(nc);
  for (int i = 0; i < nc; ++i) circle[i] = {std::cos(kTwoPi * i / nc), std::sin(kTwoPi * i / nc), 0, 0, 0, 0};
  const int ns = static_cast<int>(std::ceil(4.0 / eps));
  std::vector<Embedded6> square;
  square.reserve(static_cast<std::size_t>(ns) * ns);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) square.push_back({(i + 0.5) / ns, (j + 0.5) / ns, 0, 0, 0, 0});
  const double pc = static_cast<double>(box_count(circle, eps)) * std::pow(eps, n);
  const double ps = static_cast<double>(box_count(square, eps)) * std::pow(eps, n);
  return std::sqrt(pc * ps);
}

inline constexpr double kDecreaseRatio = 0.75;

// Admissible: smallest-scale proxy below the cutoff and still falling.
// NotAdmissible: smallest-scale proxy at or above the cutoff and levelled off.
inline Admissibility admissibility_verdict(const CoverReport& report, double proxy_cutoff) {
  const auto& p = report.proxies;
  if (p.size() < 4) throw InsufficientSamples("verdict needs at least 4 scales");
  // order by scale so "last" is the finest
  std::vector<std::size_t> order(p.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return report.scales[a] > report.scales[b]; });
  const double fine = p[order.back()], prev = p[order[order.size() - 2]];
  if (fine == 0.0) return Admissibility::Admissible;
  const double ratio = prev > 0 ? fine / prev : std::numeric_limits<double>::infinity();
  if (fine < proxy_cutoff && ratio <= kDecreaseRatio) return Admissibility::Admissible;
  if (fine >= proxy_cutoff && ratio >= kDecreaseRatio) return Admissibility::NotAdmissible;
  return Admissibility::Inconclusive;
}

// Largest relative proxy change at the two finest scales.
inline double proxy_drift(const CoverReport& a, const CoverReport& b) {
  if (a.proxies.size() != b.proxies.size() || a.proxies.size() < 2) throw ConfigError("reports are not comparable");
  std::vector<std::size_t> order(a.proxies.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a.scales[x] < a.scales[y]; });
  double drift = 0.0;
  for (int q = 0; q < 2; ++q) {
    const double pa = a.proxies[order[q]], pb = b.proxies[order[q]];
    if (pa == 0.0 && pb == 0.0) continue;
    drift = std::max(drift, std::abs(pb - pa) / std::max(pa, pb));
  }
  return drift;
}

}  // namespace eigenlab

#endif  // EIGENLAB_FLOWOUT_HPP
