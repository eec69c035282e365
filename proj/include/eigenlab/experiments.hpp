#ifndef EIGENLAB_EXPERIMENTS_HPP
#define EIGENLAB_EXPERIMENTS_HPP

// Configuration-driven pipelines. Each experiment writes CSV tables, a flat
// JSON record that echoes the effective configuration, and a manifest.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eigenlab/bounds.hpp"
#include "eigenlab/common.hpp"
#include "eigenlab/eigenmodes.hpp"
#include "eigenlab/flowout.hpp"
#include "eigenlab/geometry.hpp"
#include "eigenlab/io.hpp"
#include "eigenlab/microlocal.hpp"
#include "eigenlab/schrodinger.hpp"

namespace eigenlab {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> n{"scaling", "lift", "flowout", "related", "sogge", "schrodinger", "full-suite"};
  return n;
}

struct ExperimentConfig {
  std::string experiment = "scaling";
  std::string family = "zonal";
  std::vector<int> k;                 // empty: experiment default
  std::vector<double> h;              // oscillator ladder
  std::vector<std::uint64_t> seeds;   // random waves
  std::string x;                      // named point or "a,b"; empty: family default
  double delta = 0.3;
  std::vector<double> T{0.5, 1.0, 2.0, kPi};
  int n1 = 64, n2 = 64, nphi = 64;
  double width = 1.0;
  double tau = 1e-2;
  std::vector<double> scales = default_scales();
  int ndirs = 4096, ntimes = 2048;
  int verdict_k = 100;
  int lattice = 64;
  double proxy_cutoff = 0.0;  // 0: calibrated
  bool drift_check = true;
  std::string output = "eigenlab-out";
};

// --- validation -----------------------------------------------------------

inline Vec2 named_point(const std::string& name, FamilyKind fam) {
  if (name == "pole") return Vec2(0.0, 0.0);
  if (name == "equator") return Vec2(kPi / 2, 0.3);
  if (name == "equator-offset") return Vec2(kPi / 2 - 0.5, 0.3);
  if (name == "origin") return Vec2(0.0, 0.0);
  if (name == "off-circle") return Vec2(0.3, 0.0);
  std::stringstream ss(name);
  double a = 0, b = 0;
  char comma = 0;
  if (ss >> a >> comma >> b && comma == ',' && ss.peek() == EOF) return Vec2(a, b);
  (void)fam;
  throw ConfigError("x: expected pole, equator, equator-offset, origin, off-circle or \"a,b\"; got \"" + name + "\"");
}

inline std::string default_point(const std::string& experiment, FamilyKind fam) {
  switch (fam) {
    case FamilyKind::Zonal: return "pole";
    case FamilyKind::HighestWeight: return experiment == "related" ? "equator-offset" : "equator";
    case FamilyKind::TorusWave: return "1,1";
    case FamilyKind::SphereRandomWave: return "1,1";
    case FamilyKind::OscillatorMode: return "off-circle";
  }
  return "pole";
}

inline std::vector<int> default_ks(const std::string& experiment, FamilyKind fam) {
  if (experiment == "lift" || experiment == "flowout") return {100};
  if (experiment == "related") return {50, 100, 200};
  if (fam == FamilyKind::SphereRandomWave) return {25, 50, 100, 200};
  return {25, 50, 100, 200, 400};
}

// Fills defaults and checks every field; errors name the offending field.
inline ExperimentConfig resolve(ExperimentConfig c) {
  auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); };
  if (std::find(experiment_names().begin(), experiment_names().end(), c.experiment) == experiment_names().end())
    fail("experiment", "unknown experiment \"" + c.experiment + "\"");
  FamilyKind fam;
  try {
    fam = family_from_string(c.family);
  } catch (const Error&) {
    fail("family", "unknown family \"" + c.family + "\"");
  }
  c.family = to_string(fam);
  if (c.experiment == "schrodinger") c.family = to_string(fam = FamilyKind::OscillatorMode);
  if (fam == FamilyKind::OscillatorMode && c.experiment != "schrodinger" && c.experiment != "full-suite")
    fail("family", "oscillator modes run through the schrodinger experiment");
  if (c.k.empty()) c.k = default_ks(c.experiment, fam);
  for (int k : c.k)
    if (k < 1 || k > 2000) fail("k", "degrees must lie in [1, 2000]");
  if (!std::is_sorted(c.k.begin(), c.k.end()) || std::adjacent_find(c.k.begin(), c.k.end()) != c.k.end())
    fail("k", "ladder must be strictly increasing");
  if (c.h.empty()) c.h = default_h_ladder();
  for (double h : c.h)
    if (!(h > 0 && h <= 0.1)) fail("h", "values must lie in (0, 0.1]");
  if (fam == FamilyKind::SphereRandomWave && c.seeds.empty()) fail("seeds", "required for the random-wave family");
  if (c.x.empty()) c.x = default_point(c.experiment, fam);
  (void)named_point(c.x, fam);
  if (!(c.delta >= 0.1 && c.delta <= 0.5) && c.experiment == "related") fail("delta", "must lie in [0.1, 0.5]");
  if (!(c.delta > 0 && c.delta <= kPi / 2)) fail("delta", "must lie in (0, pi/2]");
  if (c.T.empty()) fail("T", "ladder must not be empty");
  for (double t : c.T)
    if (!(t > 0.5 * c.delta && t <= 10.0)) fail("T", "values must lie in (delta/2, 10]");
  if (c.n1 < 8 || c.n2 < 8 || c.nphi < 8) fail("grid", "dimensions must be at least 8");
  if (!(c.width >= 0.5 && c.width <= 2.0)) fail("width", "must lie in [0.5, 2]");
  if (!(c.tau > 0 && c.tau < 1)) fail("tau", "must lie in (0, 1)");
  if (c.scales.size() < 4) fail("scales", "need at least 4 scales");
  for (double e : c.scales)
    if (!(e >= kMinScale && e <= kMaxScale)) fail("scales", "values must lie in [0.02, 0.5]");
  if (!std::is_sorted(c.scales.rbegin(), c.scales.rend())) fail("scales", "ladder must be descending");
  if (c.scales.front() / c.scales.back() < 8.0 - 1e-9) fail("scales", "ladder must span a factor of at least 8");
  if (c.ndirs < 64 || c.ndirs % 4) fail("ndirs", "must be a multiple of 4 and at least 64");
  if (c.ntimes < 64) fail("ntimes", "must be at least 64");
  if (c.verdict_k < 1 || c.verdict_k > 2000) fail("verdict_k", "must lie in [1, 2000]");
  if (c.lattice < 4) fail("lattice", "must be at least 4");
  if (c.proxy_cutoff < 0) fail("proxy_cutoff", "must be nonnegative");
  if (c.output.empty()) fail("output", "must not be empty");
  return c;
}

inline Json config_json(const ExperimentConfig& c) {
  Json j = Json::object();
  j["experiment"] = c.experiment;
  j["family"] = c.family;
  j["k"] = c.k;
  j["h"] = c.h;
  j["seeds"] = c.seeds;
  j["x"] = c.x;
  j["delta"] = c.delta;
  j["T"] = c.T;
  j["grid"] = std::vector<int>{c.n1, c.n2, c.nphi};
  j["width"] = c.width;
  j["tau"] = c.tau;
  j["scales"] = c.scales;
  j["ndirs"] = c.ndirs;
  j["ntimes"] = c.ntimes;
  j["verdict_k"] = c.verdict_k;
  j["lattice"] = c.lattice;
  j["proxy_cutoff"] = c.proxy_cutoff;
  j["drift_check"] = c.drift_check;
  j["output"] = c.output;
  return j;
}

// --- members ----------------------------------------------------------------

inline Eigenfunction make_member(FamilyKind fam, int k, std::uint64_t seed = 0) {
  switch (fam) {
    case FamilyKind::Zonal: return zonal(k);
    case FamilyKind::HighestWeight: return highest_weight(k);
    case FamilyKind::TorusWave: return torus_wave(Eigen::Vector2i(k, 0));
    case FamilyKind::SphereRandomWave: return random_wave(k, seed);
    case FamilyKind::OscillatorMode: break;
  }
  throw UnsupportedModel("oscillator members come from the schrodinger ladders");
}

inline std::vector<Eigenfunction> make_family(const ExperimentConfig& c, std::uint64_t seed = 0) {
  const FamilyKind fam = family_from_string(c.family);
  std::vector<Eigenfunction> out;
  for (int k : c.k) out.push_back(make_member(fam, k, seed));
  return out;
}

// --- results ----------------------------------------------------------------

enum class Verdict { Consistent, Violation };

inline std::string to_string(Verdict v) { return v == Verdict::Consistent ? "CONSISTENT" : "VIOLATION"; }

struct ExperimentResult {
  std::string name;
  std::string theorem;
  Verdict verdict = Verdict::Consistent;
  std::string headline;  // one-line metric summary
  Json record;
  double seconds = 0.0;
};

namespace detail {

inline std::string cell(double v) { return fmt_number(v); }

inline std::string theorem_for(FamilyKind fam) {
  switch (fam) {
    case FamilyKind::Zonal: return "Theorem 3";
    case FamilyKind::HighestWeight: return "Theorem 1";
    case FamilyKind::TorusWave:
    case FamilyKind::SphereRandomWave: return "Theorem 2";
    case FamilyKind::OscillatorMode: return "Theorem 5.1";
  }
  return "";
}

inline PhaseGrid lift_grid(const ExperimentConfig& c, FamilyKind fam) {
  if (fam == FamilyKind::TorusWave) return PhaseGrid::torus(c.n1, c.nphi);
  return PhaseGrid::sphere(c.n1, c.n2, c.nphi);
}

}  // namespace detail

// Admissibility at one base point over the T ladder, from the ridge-restricted
// support of a lift. Annuli are A_x(delta/2, T).
struct AdmissibilityScan {
  std::vector<double> T;
  std::vector<CoverReport> covers;
  std::vector<Admissibility> verdicts;
  std::vector<double> drifts;  // empty when the drift check is off
  std::vector<std::size_t> ridge_dirs;
  double proxy_cutoff = 0.0;
  Admissibility overall = Admissibility::Inconclusive;
  RidgeSupport last_ridge;
};

inline Admissibility combine_verdicts(const std::vector<Admissibility>& v) {
  bool all_not = !v.empty();
  for (auto a : v) {
    if (a == Admissibility::Admissible) return Admissibility::Admissible;  // some T works
    all_not = all_not && a == Admissibility::NotAdmissible;
  }
  return all_not ? Admissibility::NotAdmissible : Admissibility::Inconclusive;
}

inline AdmissibilityScan scan_admissibility(const LiftEstimate& lift, const Vec2& x, const ExperimentConfig& c) {
  AdmissibilityScan s;
  s.T = c.T;
  s.proxy_cutoff = c.proxy_cutoff > 0 ? c.proxy_cutoff : calibrated_proxy_cutoff(c.scales);
  const ManifoldModel model = lift.grid.model;
  const Vec3 xb = embed_base(model, x);
  const RidgeOptions ro;
  for (double T : c.T) {
    const FlowOutSet fo = build_flowout_at(model, xb, T, c.ndirs, c.ntimes);
    const Annulus ann = annulus(fo, 0.5 * c.delta, T);
    RidgeSupport rs;
    CoverReport rep = ridge_cover(*lift.probe, lift.max_density, ann, c.tau, c.scales, ro, &rs);
    s.ridge_dirs.push_back(rs.directions.size());
    s.verdicts.push_back(admissibility_verdict(rep, s.proxy_cutoff));
    if (c.drift_check) {
      const FlowOutSet fo2 = build_flowout_at(model, xb, T, 2 * c.ndirs, 2 * c.ntimes);
      const Annulus ann2 = annulus(fo2, 0.5 * c.delta, T);
      const CoverReport rep2 = ridge_cover(*lift.probe, lift.max_density, ann2, c.tau, c.scales, ro);
      s.drifts.push_back(proxy_drift(rep, rep2));
    }
    s.covers.push_back(std::move(rep));
    s.last_ridge = std::move(rs);
  }
  s.overall = combine_verdicts(s.verdicts);
  return s;
}

// --- scaling ----------------------------------------------------------------

inline ExperimentResult run_scaling(const ExperimentConfig& c, ArtifactWriter& out) {
  const FamilyKind fam = family_from_string(c.family);
  ExperimentResult r;
  r.name = "scaling-" + c.family;
  r.theorem = detail::theorem_for(fam);
  CsvTable csv({"family", "seed", "k", "lambda", "h", "sup", "argmax_1", "argmax_2", "fitted_exponent", "fitted_constant"});
  const std::vector<std::uint64_t> seeds = fam == FamilyKind::SphereRandomWave ? c.seeds : std::vector<std::uint64_t>{0};
  std::vector<double> exponents, constants, r2s;
  std::vector<std::vector<ScalingSample>> all;
  for (std::uint64_t seed : seeds) {
    const auto members = make_family(c, seed);
    std::vector<ScalingSample> samples(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) samples[i] = sup_norm(members[i]);
    const ScalingFit fit = fit_growth(samples);
    exponents.push_back(fit.exponent);
    constants.push_back(fit.constant);
    r2s.push_back(fit.r2);
    for (const auto& s : samples)
      csv.row({c.family, std::to_string(seed), std::to_string(s.k), detail::cell(s.lambda), detail::cell(s.h),
               detail::cell(s.sup_value), detail::cell(s.argmax.x()), detail::cell(s.argmax.y()), detail::cell(fit.exponent),
               detail::cell(fit.constant)});
    all.push_back(std::move(samples));
  }
  const double worst = *std::max_element(exponents.begin(), exponents.end());

  Json j = config_json(c);
  j["result"] = "scaling";
  j["theorem"] = r.theorem;
  j["exponents"] = exponents;
  j["constants"] = constants;
  j["r2"] = r2s;
  j["max_exponent"] = worst;
  std::vector<double> pole_errors;
  if (fam == FamilyKind::Zonal)
    for (const auto& s : all.front()) pole_errors.push_back(std::abs(s.sup_value - std::sqrt((2.0 * s.k + 1) / (4 * kPi))));
  if (!pole_errors.empty()) j["pole_value_errors"] = pole_errors;

  bool hypothesis = true;  // strong scarring / diffuse families satisfy theirs by construction
  if (fam == FamilyKind::Zonal) {
    // the hypothesis is admissibility at every tested point; the sup is attained at the argmax
    const Eigenfunction uv = make_member(fam, c.verdict_k);
    const LiftEstimate lift = husimi_lift(uv, detail::lift_grid(c, fam), c.width);
    const Vec2 x = all.front().back().argmax;
    const AdmissibilityScan scan = scan_admissibility(lift, x, c);
    hypothesis = scan.overall == Admissibility::Admissible;
    j["verdict_point"] = std::vector<double>{x.x(), x.y()};
    j["admissibility"] = to_string(scan.overall);
    std::vector<std::string> vs;
    for (auto a : scan.verdicts) vs.push_back(to_string(a));
    j["admissibility_per_T"] = vs;
  }
  const bool violation = hypothesis && worst >= 0.5 - kExponentMargin;
  r.verdict = violation ? Verdict::Violation : Verdict::Consistent;
  j["verdict"] = to_string(r.verdict);
  char buf[160];
  std::snprintf(buf, sizeof buf, "exponent %.4f (max over %zu fits)", worst, exponents.size());
  r.headline = buf;
  r.record = j;
  out.write_csv("scaling.csv", csv);
  out.write_json("scaling.json", j);
  return r;
}

// --- lift -------------------------------------------------------------------

inline ExperimentResult run_lift(const ExperimentConfig& c, ArtifactWriter& out) {
  const FamilyKind fam = family_from_string(c.family);
  ExperimentResult r;
  r.name = "lift-" + c.family;
  r.theorem = detail::theorem_for(fam);
  const std::uint64_t seed = c.seeds.empty() ? 0 : c.seeds.front();
  const PhaseGrid grid = detail::lift_grid(c, fam);
  Json j = config_json(c);
  j["result"] = "lift";
  std::vector<double> near01, near025, liouville, defect, tv;
  LiftEstimate last;
  for (int k : c.k) {
    const Eigenfunction u = make_member(fam, k, seed);
    LiftEstimate lift = husimi_lift(u, grid, c.width);
    liouville.push_back(liouville_deviation(lift));
    defect.push_back(flow_invariance_defect(lift, 1.0));
    DistanceToSet ref;
    if (fam == FamilyKind::Zonal) {
      ref = [](const PhaseState& z) { return distance_to_meridians(z, Vec3::UnitZ()); };
      tv.push_back(total_variation(lift.weights, zonal_measure_oracle(grid).weights));
    } else if (fam == FamilyKind::HighestWeight) {
      ref = [](const PhaseState& z) { return distance_to_circle(z, Vec3::UnitZ(), false); };
    }
    if (ref) {
      near01.push_back(measure_of_set(lift, ref, 0.1));
      near025.push_back(measure_of_set(lift, ref, 0.25));
    }
    last = std::move(lift);
  }
  j["k_lifted"] = c.k;
  j["liouville_deviation"] = liouville;
  j["flow_defect_t1"] = defect;
  if (!near01.empty()) {
    j["mass_within_0.1"] = near01;
    j["mass_within_0.25"] = near025;
  }
  if (!tv.empty()) j["tv_to_oracle"] = tv;
  j["h"] = last.h;
  j["max_density"] = last.max_density;
  j["grid_dims"] = std::vector<int>{grid.n1, grid.n2, grid.nphi};
  j["seed"] = seed;
  j["verdict"] = "CONSISTENT";
  CsvTable csv({"r", "theta", "fiber_angle", "weight"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    int a = 0, b = 0, l = 0;
    grid.unpack(i, a, b, l);
    csv.row({detail::cell(grid.coord1(a)), detail::cell(grid.coord2(b)), detail::cell(grid.angle(l)),
             detail::cell(last.weights[i])});
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "liouville deviation %.3f at k=%d", liouville.back(), c.k.back());
  r.headline = buf;
  r.record = j;
  out.write_csv("lift.csv", csv);
  out.write_json("lift.json", j);
  return r;
}

// --- flow-out ---------------------------------------------------------------

inline void write_boxcount(const AdmissibilityScan& s, CsvTable& csv) {
  for (std::size_t t = 0; t < s.covers.size(); ++t)
    for (std::size_t e = 0; e < s.covers[t].scales.size(); ++e)
      csv.row({detail::cell(s.T[t]), detail::cell(s.covers[t].scales[e]), std::to_string(s.covers[t].counts[e]),
               detail::cell(s.covers[t].proxies[e])});
}

inline void scan_json(const AdmissibilityScan& s, Json& j) {
  std::vector<double> dims, finest;
  std::vector<std::string> vs;
  std::vector<std::vector<std::size_t>> counts;
  for (std::size_t t = 0; t < s.covers.size(); ++t) {
    dims.push_back(s.covers[t].dim_estimate);
    finest.push_back(s.covers[t].proxies.back());
    vs.push_back(to_string(s.verdicts[t]));
    counts.push_back(s.covers[t].counts);
  }
  j["dim_estimate"] = dims;
  j["finest_proxy"] = finest;
  j["box_counts"] = counts;
  j["verdict_per_T"] = vs;
  j["ridge_directions"] = s.ridge_dirs;
  j["proxy_drift"] = s.drifts;
  j["proxy_cutoff_effective"] = s.proxy_cutoff;
  j["admissibility"] = to_string(s.overall);
}

inline ExperimentResult run_flowout(const ExperimentConfig& c, ArtifactWriter& out) {
  const FamilyKind fam = family_from_string(c.family);
  ExperimentResult r;
  r.name = "flowout-" + c.family;
  r.theorem = detail::theorem_for(fam);
  const std::uint64_t seed = c.seeds.empty() ? 0 : c.seeds.front();
  const Eigenfunction u = make_member(fam, c.k.back(), seed);
  const LiftEstimate lift = husimi_lift(u, detail::lift_grid(c, fam), c.width);
  const Vec2 x = named_point(c.x, fam);
  const AdmissibilityScan s = scan_admissibility(lift, x, c);
  CsvTable csv({"T", "epsilon", "count", "proxy"});
  write_boxcount(s, csv);
  // overlay samples: the kept directions at the largest T, thinned
  CsvTable overlay({"r", "theta", "fiber_angle", "t"});
  {
    const ManifoldModel model = lift.grid.model;
    const FlowOutSet fo = build_flowout_at(model, embed_base(model, x), c.T.back(), c.ndirs, c.ntimes);
    const std::size_t stride = std::max<std::size_t>(1, s.last_ridge.directions.size() / 64);
    for (std::size_t d = 0; d < s.last_ridge.directions.size(); d += stride)
      for (int q = 0; q < fo.ntimes(); q += 8) {
        const PhaseState z = fo.sample(s.last_ridge.directions[d], q);
        int a = 0, b = 0, l = 0;
        lift.grid.unpack(lift.grid.locate(z), a, b, l);
        overlay.row({detail::cell(lift.grid.coord1(a)), detail::cell(lift.grid.coord2(b)), detail::cell(lift.grid.angle(l)),
                     detail::cell(fo.times[q])});
      }
  }
  Json j = config_json(c);
  j["result"] = "flowout";
  j["point"] = std::vector<double>{x.x(), x.y()};
  scan_json(s, j);
  j["verdict"] = "CONSISTENT";
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s, dim %.3f at T=%g", to_string(s.overall).c_str(), s.covers.back().dim_estimate,
                s.T.back());
  r.headline = buf;
  r.record = j;
  out.write_csv("boxcount.csv", csv);
  out.write_csv("flowout_overlay.csv", overlay);
  out.write_json("flowout.json", j);
  return r;
}

// --- related ----------------------------------------------------------------

inline ExperimentResult run_related(const ExperimentConfig& c, ArtifactWriter& out) {
  const FamilyKind fam = family_from_string(c.family);
  ExperimentResult r;
  r.name = "related-" + c.family;
  r.theorem = "Theorem 3";
  const std::uint64_t seed = c.seeds.empty() ? 0 : c.seeds.front();
  const auto members = make_family(c, seed);
  const Vec2 x = named_point(c.x, fam);
  LiftParams lp;
  lp.n1 = c.n1;
  lp.n2 = c.n2;
  lp.nphi = c.nphi;
  lp.width = c.width;
  lp.tau = c.tau;
  CoverParams cp;
  cp.ndirs = c.ndirs;
  cp.ntimes = c.ntimes;
  cp.scales = c.scales;
  cp.proxy_cutoff = c.proxy_cutoff;
  const RelatedReport rep = check_related(members, x, c.delta, lp, cp);
  CsvTable csv({"k", "lambda", "lhs", "rhs", "ratio"});
  for (std::size_t i = 0; i < members.size(); ++i)
    csv.row({std::to_string(members[i].k), detail::cell(rep.lambdas[i]), detail::cell(rep.lhs[i]), detail::cell(rep.rhs),
             detail::cell(rep.ratios[i])});
  CsvTable box({"T", "epsilon", "count", "proxy"});
  for (std::size_t e = 0; e < rep.cover.scales.size(); ++e)
    box.row({detail::cell(3.0 * c.delta), detail::cell(rep.cover.scales[e]), std::to_string(rep.cover.counts[e]),
             detail::cell(rep.cover.proxies[e])});
  // a vanishing restricted support forces the lhs to decay
  const bool violation = rep.verdict == Admissibility::Admissible && !(rep.lhs_slope < -kExponentMargin);
  r.verdict = violation ? Verdict::Violation : Verdict::Consistent;
  Json j = config_json(c);
  j["result"] = "related";
  j["theorem"] = r.theorem;
  j["point"] = std::vector<double>{x.x(), x.y()};
  j["lambda"] = rep.lambdas;
  j["lhs"] = rep.lhs;
  j["rhs"] = rep.rhs;
  j["ratio"] = rep.ratios;
  j["lhs_slope"] = rep.lhs_slope;
  j["lhs_decreasing"] = rep.lhs_decreasing;
  j["finest_proxy"] = rep.cover.proxies.back();
  j["dim_estimate"] = rep.cover.dim_estimate;
  j["ridge_directions"] = rep.ridge_directions;
  j["proxy_cutoff_effective"] = rep.proxy_cutoff;
  j["admissibility"] = to_string(rep.verdict);
  j["verdict"] = to_string(r.verdict);
  char buf[200];
  std::snprintf(buf, sizeof buf, "lhs %.4f..%.4g, rhs %.4g, %s", rep.lhs.front(), rep.lhs.back(), rep.rhs,
                to_string(rep.verdict).c_str());
  r.headline = buf;
  r.record = j;
  out.write_csv("related.csv", csv);
  out.write_csv("related_boxcount.csv", box);
  out.write_json("related.json", j);
  return r;
}

// --- sogge ------------------------------------------------------------------

inline ExperimentResult run_sogge(const ExperimentConfig& c, ArtifactWriter& out) {
  const FamilyKind fam = family_from_string(c.family);
  ExperimentResult r;
  r.name = "sogge-" + c.family;
  r.theorem = "local L2 bound";
  const std::uint64_t seed = c.seeds.empty() ? 0 : c.seeds.front();
  const auto members = make_family(c, seed);
  const Vec2 x = named_point(c.x, fam);
  CsvTable csv({"k", "lambda", "delta", "lhs", "rhs", "ratio", "ball_l2"});
  std::vector<double> lk, lr;
  for (const auto& u : members) {
    const BoundReport b = check_sogge_local(u, x, c.delta, c.lattice);
    csv.row({std::to_string(u.k), detail::cell(u.lambda), detail::cell(c.delta), detail::cell(b.lhs), detail::cell(b.rhs),
             detail::cell(b.ratio), detail::cell(b.params.at("ball_l2"))});
    lk.push_back(std::log(static_cast<double>(u.k)));
    lr.push_back(std::log(b.ratio));
  }
  const double slope = lk.size() >= 2 ? fit_line(lk, lr).slope : 0.0;
  // the bound fails only if the ratio grows
  r.verdict = slope > kExponentMargin ? Verdict::Violation : Verdict::Consistent;
  Json j = config_json(c);
  j["result"] = "sogge";
  j["point"] = std::vector<double>{x.x(), x.y()};
  j["ratio_slope"] = slope;
  j["no_trend"] = std::abs(slope) <= kExponentMargin;
  j["verdict"] = to_string(r.verdict);
  char buf[160];
  std::snprintf(buf, sizeof buf, "log-ratio slope %.4f", slope);
  r.headline = buf;
  r.record = j;
  out.write_csv("sogge.csv", csv);
  out.write_json("sogge.json", j);
  return r;
}

// --- schrodinger ------------------------------------------------------------

inline ExperimentResult run_schrodinger(const ExperimentConfig& c, ArtifactWriter& out) {
  ExperimentResult r;
  r.name = "schrodinger-oscillator";
  r.theorem = "Theorem 5.1";
  DichotomyOptions opt;
  opt.hs = c.h;
  opt.delta = c.delta;
  opt.circular_point = named_point(c.x, FamilyKind::OscillatorMode);
  opt.tau = c.tau;
  opt.scales = c.scales;
  opt.ndirs = std::min(c.ndirs, 1024);
  opt.ntimes = std::min(c.ntimes, 512);
  const OscillatorDichotomy d = oscillator_dichotomy(opt);
  CsvTable csv({"experiment", "ladder", "h", "n", "m", "value", "scaled_ball_sup"});
  const auto radial = radial_ladder(opt.hs), circular = circular_ladder(opt.hs);
  for (std::size_t i = 0; i < radial.size(); ++i)
    csv.row({"schrodinger", "radial", detail::cell(radial[i].h), std::to_string(radial[i].n), std::to_string(radial[i].m),
             detail::cell(d.origin_samples[i].sup_value), detail::cell(d.radial_scaled_sup[i])});
  for (std::size_t i = 0; i < circular.size(); ++i)
    csv.row({"schrodinger", "circular", detail::cell(circular[i].h), std::to_string(circular[i].n),
             std::to_string(circular[i].m), detail::cell(d.sup_samples[i].sup_value), detail::cell(d.circular_scaled_sup[i])});
  CsvTable box({"ladder", "epsilon", "count", "proxy"});
  for (std::size_t e = 0; e < d.radial_cover.scales.size(); ++e)
    box.row({"radial", detail::cell(d.radial_cover.scales[e]), std::to_string(d.radial_cover.counts[e]),
             detail::cell(d.radial_cover.proxies[e])});
  for (std::size_t e = 0; e < d.circular_cover.scales.size(); ++e)
    box.row({"circular", detail::cell(d.circular_cover.scales[e]), std::to_string(d.circular_cover.counts[e]),
             detail::cell(d.circular_cover.proxies[e])});

  std::vector<double> lh, ls;
  for (std::size_t i = 0; i < circular.size(); ++i)
    if (d.circular_scaled_sup[i] > 0) {
      lh.push_back(std::log(circular[i].h));
      ls.push_back(std::log(d.circular_scaled_sup[i]));
    }
  // decay in h means a positive slope against log h
  const bool circular_decays = lh.size() >= 2 && fit_line(lh, ls).slope > kExponentMargin;
  const bool violation = (d.circular_verdict == Admissibility::Admissible && !circular_decays) ||
                         (d.radial_verdict == Admissibility::Admissible && d.origin_exponent <= -0.5 + kExponentMargin);
  r.verdict = violation ? Verdict::Violation : Verdict::Consistent;
  Json j = config_json(c);
  j["result"] = "schrodinger";
  j["theorem"] = r.theorem;
  j["energy"] = opt.E;
  j["origin_exponent"] = d.origin_exponent;
  j["sup_exponent"] = d.sup_exponent;
  j["origin_r2"] = d.origin_r2;
  j["sup_r2"] = d.sup_r2;
  j["invariant_drift"] = d.invariant_drift;
  j["radial_admissibility"] = to_string(d.radial_verdict);
  j["circular_admissibility"] = to_string(d.circular_verdict);
  j["radial_dim_estimate"] = d.radial_cover.dim_estimate;
  j["circular_dim_estimate"] = d.circular_cover.dim_estimate;
  j["radial_scaled_sup"] = d.radial_scaled_sup;
  j["circular_scaled_sup"] = d.circular_scaled_sup;
  j["circular_point"] = std::vector<double>{opt.circular_point.x(), opt.circular_point.y()};
  j["shell_mass_outside"] = d.shell_mass_outside;
  j["lift_h"] = d.lift_h;
  j["proxy_cutoff_effective"] = d.proxy_cutoff;
  j["verdict"] = to_string(r.verdict);
  char buf[200];
  std::snprintf(buf, sizeof buf, "origin exp %.3f, sup exp %.3f, %s/%s", d.origin_exponent, d.sup_exponent,
                to_string(d.radial_verdict).c_str(), to_string(d.circular_verdict).c_str());
  r.headline = buf;
  r.record = j;
  out.write_csv("schrodinger.csv", csv);
  out.write_csv("schrodinger_boxcount.csv", box);
  out.write_json("schrodinger.json", j);
  return r;
}

// --- dispatch ---------------------------------------------------------------

inline ExperimentResult run_single(const ExperimentConfig& c, ArtifactWriter& out) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult r;
  if (c.experiment == "scaling") r = run_scaling(c, out);
  else if (c.experiment == "lift") r = run_lift(c, out);
  else if (c.experiment == "flowout") r = run_flowout(c, out);
  else if (c.experiment == "related") r = run_related(c, out);
  else if (c.experiment == "sogge") r = run_sogge(c, out);
  else if (c.experiment == "schrodinger") r = run_schrodinger(c, out);
  else throw ConfigError("experiment: \"" + c.experiment + "\" is not a single experiment");
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// The six canonical experiments with their default parameters.
inline std::vector<ExperimentConfig> suite_configs(const ExperimentConfig& base) {
  auto make = [&](const std::string& exp, const std::string& fam, const std::string& sub) {
    ExperimentConfig c = base;
    c.experiment = exp;
    c.family = fam;
    c.k.clear();
    c.x.clear();
    c.output = (std::filesystem::path(base.output) / sub).string();
    return resolve(c);
  };
  return {make("scaling", "zonal", "zonal-scaling"),         make("scaling", "highest-weight", "scar-scaling"),
          make("scaling", "torus-wave", "torus-scaling"),    make("related", "zonal", "zonal-related"),
          make("related", "highest-weight", "scar-related"), make("schrodinger", "oscillator", "oscillator")};
}

struct SuiteResult {
  std::vector<ExperimentResult> results;
  bool any_violation() const {
    for (const auto& r : results)
      if (r.verdict == Verdict::Violation) return true;
    return false;
  }
};

inline SuiteResult full_suite(const ExperimentConfig& base, ArtifactWriter& out, std::FILE* log = nullptr) {
  SuiteResult s;
  CsvTable csv({"experiment", "theorem", "verdict", "headline"});
  for (const auto& c : suite_configs(base)) {
    if (log) std::fprintf(log, "running %s (%s)\n", c.experiment.c_str(), c.family.c_str());
    ArtifactWriter sub(c.output);
    ExperimentResult r = run_single(c, sub);
    sub.finish();
    if (log) std::fprintf(log, "  %-28s %-12s %s  [%s]\n", r.name.c_str(), r.theorem.c_str(), to_string(r.verdict).c_str(),
                          r.headline.c_str());
    csv.row({r.name, r.theorem, to_string(r.verdict), r.headline});
    s.results.push_back(std::move(r));
  }
  Json j = config_json(base);
  j["result"] = "full-suite";
  std::vector<std::string> names, theorems, verdicts;
  for (const auto& r : s.results) {
    names.push_back(r.name);
    theorems.push_back(r.theorem);
    verdicts.push_back(to_string(r.verdict));
  }
  j["experiments"] = names;
  j["theorems"] = theorems;
  j["verdicts"] = verdicts;
  j["any_violation"] = s.any_violation();
  out.write_csv("summary.csv", csv);
  out.write_json("summary.json", j);
  return s;
}

}  // namespace eigenlab

#endif  // EIGENLAB_EXPERIMENTS_HPP
