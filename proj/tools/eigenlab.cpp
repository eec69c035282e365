// eigenlab: experiment runner.
//
//   eigenlab run <experiment> [--config file.toml] [overrides...]
//   eigenlab run full-suite --output out/
//
// Exit status: 0 all CONSISTENT, 1 any VIOLATION, 2 usage, configuration or
// pipeline error.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "eigenlab/config.hpp"
#include "eigenlab/experiments.hpp"

namespace {

template <class T>
std::vector<T> parse_list(const std::string& field, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::stringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) throw eigenlab::ConfigError(field + ": cannot parse \"" + item + "\"");
    out.push_back(v);
  }
  if (out.empty()) throw eigenlab::ConfigError(field + ": empty list");
  return out;
}

// "pi" is accepted inside T lists
std::vector<double> parse_times(const std::string& text) {
  std::string t = text;
  for (std::size_t p; (p = t.find("pi")) != std::string::npos;) t.replace(p, 2, "3.14159265358979323846");
  return parse_list<double>("T", t);
}

struct Overrides {
  std::string config, family, k, h, seeds, x, T, grid, scales, output;
  std::optional<double> delta, width, tau, proxy_cutoff;
  std::optional<int> ndirs, ntimes, verdict_k, lattice;
  bool no_drift = false;
};

eigenlab::ExperimentConfig build_config(const std::string& experiment, const Overrides& o) {
  eigenlab::ExperimentConfig c;
  if (!o.config.empty()) c = eigenlab::config_from_toml_file(o.config);
  c.experiment = experiment;
  if (!o.family.empty()) c.family = o.family;
  if (!o.k.empty()) c.k = parse_list<int>("k", o.k);
  if (!o.h.empty()) c.h = parse_list<double>("h", o.h);
  if (!o.seeds.empty()) c.seeds = parse_list<std::uint64_t>("seeds", o.seeds);
  if (!o.x.empty()) c.x = o.x;
  if (!o.T.empty()) c.T = parse_times(o.T);
  if (!o.grid.empty()) {
    const auto g = parse_list<int>("grid", o.grid);
    if (g.size() != 3) throw eigenlab::ConfigError("grid: expected n1,n2,nphi");
    c.n1 = g[0];
    c.n2 = g[1];
    c.nphi = g[2];
  }
  if (!o.scales.empty()) c.scales = parse_list<double>("scales", o.scales);
  if (!o.output.empty()) c.output = o.output;
  if (o.delta) c.delta = *o.delta;
  if (o.width) c.width = *o.width;
  if (o.tau) c.tau = *o.tau;
  if (o.proxy_cutoff) c.proxy_cutoff = *o.proxy_cutoff;
  if (o.ndirs) c.ndirs = *o.ndirs;
  if (o.ntimes) c.ntimes = *o.ntimes;
  if (o.verdict_k) c.verdict_k = *o.verdict_k;
  if (o.lattice) c.lattice = *o.lattice;
  if (o.no_drift) c.drift_check = false;
  return eigenlab::resolve(c);
}

int execute(const std::string& experiment, const Overrides& o) {
  const eigenlab::ExperimentConfig c = build_config(experiment, o);
  eigenlab::ArtifactWriter out(c.output);
  bool violation = false;
  if (c.experiment == "full-suite") {
    const auto s = eigenlab::full_suite(c, out, stdout);
    violation = s.any_violation();
    std::printf("%-28s %-16s %s\n", "experiment", "theorem", "verdict");
    for (const auto& r : s.results)
      std::printf("%-28s %-16s %s\n", r.name.c_str(), r.theorem.c_str(), eigenlab::to_string(r.verdict).c_str());
  } else {
    const auto r = eigenlab::run_single(c, out);
    violation = r.verdict == eigenlab::Verdict::Violation;
    std::printf("%s: %s [%s] %s (%.1f s)\n", r.name.c_str(), eigenlab::to_string(r.verdict).c_str(), r.theorem.c_str(),
                r.headline.c_str(), r.seconds);
  }
  out.finish();
  std::printf("outputs in %s\n", c.output.c_str());
  return violation ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eigenlab: eigenfunction growth, defect measures and flow-out admissibility"};
  app.set_help_flag("--help", "print this help and exit");  // -h is taken by the h ladder
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run one experiment or the full suite");
  std::string experiment;
  Overrides o;
  run->add_option("experiment", experiment, "scaling | lift | flowout | related | sogge | schrodinger | full-suite")
      ->required()
      ->check(CLI::IsMember(eigenlab::experiment_names()));
  run->add_option("--config", o.config, "TOML configuration file")->check(CLI::ExistingFile);
  run->add_option("--family", o.family, "zonal | highest-weight | torus-wave | random-wave | oscillator");
  run->add_option("--k", o.k, "comma-separated degree ladder");
  run->add_option("--h", o.h, "comma-separated semiclassical ladder (oscillator)");
  run->add_option("--seeds", o.seeds, "comma-separated seeds (random waves)");
  run->add_option("--x", o.x, "pole | equator | equator-offset | origin | off-circle | \"a,b\"");
  run->add_option("--delta", o.delta, "ball / annulus radius");
  run->add_option("--T", o.T, "comma-separated flow-out horizons (\"pi\" allowed)");
  run->add_option("--grid", o.grid, "phase grid n1,n2,nphi");
  run->add_option("--width", o.width, "coherent-state width in units of h");
  run->add_option("--tau", o.tau, "support threshold relative to the maximal density");
  run->add_option("--scales", o.scales, "comma-separated descending box scales");
  run->add_option("--ndirs", o.ndirs, "flow-out directions");
  run->add_option("--ntimes", o.ntimes, "flow-out times");
  run->add_option("--verdict-k", o.verdict_k, "degree used for admissibility verdicts in scaling runs");
  run->add_option("--lattice", o.lattice, "ball centers for the local L2 bound");
  run->add_option("--proxy-cutoff", o.proxy_cutoff, "override the calibrated proxy cutoff");
  run->add_flag("--no-drift-check", o.no_drift, "skip the sample-doubling drift check");
  run->add_option("--output", o.output, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return execute(experiment, o);
  } catch (const eigenlab::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const eigenlab::Error& e) {
    std::fprintf(stderr, "pipeline error [%s]: %s\n", e.kind(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
