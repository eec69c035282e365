// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance [--only <criterion>]
//
// Exit status is 0 when every selected criterion passes.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "eigenlab/eigenlab.hpp"

using namespace eigenlab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<int> kLadder{25, 50, 100, 200, 400};

ScalingFit ladder_fit(const std::function<Eigenfunction(int)>& make, const std::vector<int>& ks,
                      std::vector<ScalingSample>* keep = nullptr) {
  std::vector<ScalingSample> s;
  for (int k : ks) s.push_back(sup_norm(make(k)));
  if (keep) *keep = s;
  return fit_growth(s);
}

Outcome zonal_saturation() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ScalingSample> s;
  const ScalingFit f = ladder_fit(zonal, kLadder, &s);
  double worst = 0.0;
  for (const auto& x : s) worst = std::max(worst, std::abs(x.sup_value - std::sqrt((2.0 * x.k + 1) / (4 * kPi))));
  const double secs = seconds_since(t0);
  o.require(std::abs(f.exponent - 0.5) <= 0.03, fmt("exponent %.4f (0.50 +- 0.03)", f.exponent));
  o.require(worst <= 1e-8, fmt("pole error %.2e (<= 1e-8)", worst));
  o.require(secs <= 120.0, fmt("%.1f s (<= 120 s)", secs));
  return o;
}

Outcome strong_scarring() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ScalingFit f = ladder_fit(highest_weight, kLadder);
  const double secs = seconds_since(t0);
  o.require(std::abs(f.exponent - 0.25) <= 0.05, fmt("exponent %.4f (0.25 +- 0.05)", f.exponent));
  o.require(f.exponent < 0.45, "below 0.45");
  o.require(secs <= 300.0, fmt("%.1f s (<= 300 s)", secs));
  return o;
}

Outcome diffuse() {
  Outcome o;
  const ScalingFit t = ladder_fit([](int k) { return torus_wave(Eigen::Vector2i(k, 0)); }, kLadder);
  o.require(std::abs(t.exponent) <= 0.02, fmt("torus exponent %.4f (0 +- 0.02)", t.exponent));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ScalingFit r = ladder_fit([seed](int k) { return random_wave(k, seed); }, {25, 50, 75, 100, 150, 200});
    o.require(r.exponent < 0.45, fmt("random seed %llu exponent %.4f (< 0.45)", static_cast<unsigned long long>(seed),
                                     r.exponent));
  }
  return o;
}

Outcome defect_measure() {
  Outcome o;
  const LiftEstimate lift = husimi_lift(zonal(200), PhaseGrid::sphere());
  const double m = measure_of_set(
      lift, [](const PhaseState& z) { return distance_to_meridians(z, Vec3::UnitZ()); }, 0.1);
  o.require(m >= 0.9, fmt("k=200 mass within 0.1 of Lambda_0 %.4f (>= 0.9)", m));
  // chart tilted so the pole is interior to the grid window
  Mat3 frame;
  frame << 0, 0, 1, 0, 1, 0, -1, 0, 0;
  const PhaseGrid g = PhaseGrid::sphere(64, 64, 64, 0.2, kPi - 0.2, frame);
  const LiftEstimate oracle = zonal_measure_oracle(g);
  std::vector<double> ds, ms;
  for (double d = 0.1; d <= 0.5 + 1e-9; d += 0.05) {
    ds.push_back(d);
    ms.push_back(measure_of_set(
        oracle, [d](const PhaseState& z) { return distance_to_pole_flowout(z, Vec3::UnitZ(), d); },
        0.5 * g.cell_diameter()));
  }
  const LineFit fit = fit_line(ds, ms);
  o.require(fit.r2 >= 0.99, fmt("mu(Lambda_{p,delta}) fit R^2 %.5f (>= 0.99), slope %.4f", fit.r2, fit.slope));
  return o;
}

Outcome dichotomy() {
  Outcome o;
  ExperimentConfig base;
  base.experiment = "flowout";
  auto check = [&](const std::string& family, const std::string& x, double dim, Admissibility want) {
    ExperimentConfig c = base;
    c.family = family;
    c.x = x;
    c = resolve(c);
    const FamilyKind fam = family_from_string(c.family);
    const LiftEstimate lift = husimi_lift(make_member(fam, c.k.back()), detail::lift_grid(c, fam), c.width);
    const AdmissibilityScan s = scan_admissibility(lift, named_point(c.x, fam), c);
    o.require(s.overall == want, family + " " + to_string(s.overall) + " (" + to_string(want) + ")");
    for (std::size_t t = 0; t < s.T.size(); ++t) {
      const double d = s.covers[t].dim_estimate;
      o.require(std::abs(d - dim) <= 0.2, fmt("%s T=%.3g dim %.3f (%.1f +- 0.2)", family.c_str(), s.T[t], d, dim));
      o.require(s.drifts[t] <= 0.1, fmt("%s T=%.3g drift %.3f (<= 0.1)", family.c_str(), s.T[t], s.drifts[t]));
    }
  };
  check("highest-weight", "equator", 1.0, Admissibility::Admissible);
  check("zonal", "pole", 2.0, Admissibility::NotAdmissible);
  return o;
}

Outcome main_bound() {
  Outcome o;
  const std::vector<int> ks{50, 100, 200};
  std::vector<Eigenfunction> zf, hf;
  for (int k : ks) {
    zf.push_back(zonal(k));
    hf.push_back(highest_weight(k));
  }
  const RelatedReport z = check_related(zf, named_point("pole", FamilyKind::Zonal), 0.3);
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] >= 100) o.require(z.lhs[i] >= 0.35 && z.lhs[i] <= 0.45, fmt("zonal lhs_%d %.4f in [0.35, 0.45]", ks[i], z.lhs[i]));
  o.require(z.rhs >= std::sqrt(z.proxy_cutoff), fmt("zonal rhs %.4g (>= sqrt cutoff %.4g)", z.rhs, std::sqrt(z.proxy_cutoff)));
  const RelatedReport h = check_related(hf, named_point("equator-offset", FamilyKind::HighestWeight), 0.3);
  o.require(h.lhs_decreasing, fmt("scar lhs %.4g, %.4g, %.4g decreasing", h.lhs[0], h.lhs[1], h.lhs[2]));
  o.require(h.cover.proxies.back() < h.proxy_cutoff,
            fmt("scar proxy %.4g (< cutoff %.4g)", h.cover.proxies.back(), h.proxy_cutoff));
  return o;
}

Outcome sogge() {
  Outcome o;
  const ExperimentConfig defaults;
  for (const std::string family : {"zonal", "highest-weight", "torus-wave"}) {
    const FamilyKind fam = family_from_string(family);
    const Vec2 x = named_point(default_point("sogge", fam), fam);
    std::vector<double> lk, lr;
    for (int k : kLadder) {
      const BoundReport b = check_sogge_local(make_member(fam, k), x, 0.3, defaults.lattice);
      lk.push_back(std::log(static_cast<double>(k)));
      lr.push_back(std::log(b.ratio));
    }
    const double slope = fit_line(lk, lr).slope;
    o.require(std::abs(slope) <= 0.05, fmt("%s log-ratio slope %.4f (+- 0.05)", family.c_str(), slope));
  }
  return o;
}

Outcome oscillator() {
  Outcome o;
  const OscillatorDichotomy d = oscillator_dichotomy(DichotomyOptions{});
  o.require(std::abs(d.origin_exponent + 0.5) <= 0.05, fmt("origin exponent %.4f (-0.50 +- 0.05)", d.origin_exponent));
  o.require(std::abs(d.sup_exponent + 0.25) <= 0.05, fmt("sup exponent %.4f (-0.25 +- 0.05)", d.sup_exponent));
  o.require(d.invariant_drift <= 1e-8, fmt("invariant drift %.2e (<= 1e-8)", d.invariant_drift));
  return o;
}

// Module invariants on random samples, then the full suite with its wall time.
Outcome properties() {
  Outcome o;
  const ManifoldModel sphere = ManifoldModel::round_sphere();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> r(0.3, kPi - 0.3), a(0.0, kTwoPi), t(-5.0, 5.0);
  double energy = 0.0, group = 0.0;
  for (int i = 0; i < 50; ++i) {
    const PhaseState s = unit_state(sphere, embed_base(sphere, Vec2(r(rng), a(rng))), a(rng));
    const double t1 = t(rng), t2 = t(rng);
    const PhaseState s1 = flow_state(sphere, s, t1, 1e-10);
    energy = std::max(energy, std::abs(state_hamiltonian(s1) - 0.5));
    group = std::max(group, sasaki_distance(sphere, flow_state(sphere, s1, t2, 1e-10), flow_state(sphere, s, t1 + t2, 1e-10)));
  }
  o.require(energy <= 1e-8, fmt("geodesic energy drift %.1e", energy));
  o.require(group <= 1e-8, fmt("flow group defect %.1e", group));
  const PotentialModel osc = PotentialModel::oscillator(1.0);
  o.require(detail::invariant_drift(osc) <= 1e-8, "oscillator invariants");

  double mass = 0.0;
  for (const Eigenfunction& u : {zonal(40), highest_weight(40), random_wave(40, 5)})
    mass = std::max(mass, std::abs(husimi_lift(u, PhaseGrid::sphere(32, 32, 32)).total() - 1.0));
  o.require(mass <= 1e-6, fmt("lift mass error %.1e", mass));

  std::vector<Embedded6> pts;
  std::normal_distribution<double> n01;
  for (int i = 0; i < 4000; ++i) {
    Embedded6 e;
    for (int j = 0; j < 6; ++j) e[j] = 0.3 * n01(rng);
    pts.push_back(e);
  }
  const std::vector<Embedded6> half(pts.begin(), pts.begin() + 2000), rest(pts.begin() + 2000, pts.end());
  bool mono = true, sub = true;
  const auto& sc = default_scales();
  for (std::size_t i = 0; i + 1 < sc.size(); ++i) mono = mono && box_count(pts, sc[i]) <= box_count(pts, sc[i + 1]);
  for (double e : sc) sub = sub && box_count(pts, e) <= box_count(half, e) + box_count(rest, e);
  o.require(mono, "box counts monotone");
  o.require(sub, "box counts subadditive");

  std::vector<ScalingSample> syn;
  for (double l : {10.0, 20.0, 40.0, 80.0, 160.0}) {
    ScalingSample x;
    x.lambda = l;
    x.sup_value = 0.7 * std::pow(l, 0.37);
    syn.push_back(x);
  }
  const double fit_err = std::abs(fit_growth(syn).exponent - 0.37);
  o.require(fit_err <= 1e-10, fmt("synthetic fit error %.1e", fit_err));

  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig base;
  base.experiment = "full-suite";
  base.output = (std::filesystem::temp_directory_path() / "eigenlab-acceptance-suite").string();
  base = resolve(base);
  ArtifactWriter out(base.output);
  const SuiteResult s = full_suite(base, out);
  out.finish();
  const double secs = seconds_since(t0);
  for (const auto& x : s.results) o.require(x.verdict == Verdict::Consistent, x.name + " " + to_string(x.verdict));
  o.require(s.results.size() == 6, fmt("%zu suite experiments", s.results.size()));
  o.require(secs <= 1800.0, fmt("full suite %.0f s (<= 1800 s)", secs));
  return o;
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"zonal-saturation", zonal_saturation}, {"strong-scarring", strong_scarring}, {"diffuse", diffuse},
    {"defect-measure", defect_measure},     {"dichotomy", dichotomy},             {"main-bound", main_bound},
    {"sogge", sogge},                       {"oscillator", oscillator},           {"properties", properties},
};

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only <criterion>]\n");
      return 2;
    }
  }
  bool all = true, any = false;
  for (const auto& c : kCriteria) {
    if (!only.empty() && only != c.name) continue;
    any = true;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    std::printf("%s %-18s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    all = all && o.pass;
  }
  if (!any) {
    std::fprintf(stderr, "unknown criterion \"%s\"\n", only.c_str());
    return 2;
  }
  return all ? 0 : 1;
}
