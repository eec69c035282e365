#ifndef EIGENLAB_CONFIG_HPP
#define EIGENLAB_CONFIG_HPP

// TOML front end for ExperimentConfig. Keys mirror the JSON echo.

#include <set>
#include <string>
#include <vector>

#include <toml.hpp>

#include "eigenlab/experiments.hpp"

namespace eigenlab {

namespace detail {

template <class T>
T toml_scalar(const toml::node& n, const std::string& key) {
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = n.value<double>()) return *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (n.is_boolean()) return *n.value<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (n.is_string()) return *n.value<std::string>();
  } else {
    if (n.is_integer()) return static_cast<T>(*n.value<std::int64_t>());
  }
  throw ConfigError(key + ": wrong type");
}

template <class T>
std::vector<T> toml_list(const toml::node& n, const std::string& key) {
  std::vector<T> out;
  if (const auto* arr = n.as_array()) {
    for (const auto& e : *arr) out.push_back(toml_scalar<T>(e, key));
    return out;
  }
  out.push_back(toml_scalar<T>(n, key));
  return out;
}

}  // namespace detail

// Reads a parsed table; unknown keys are rejected so typos surface.
inline ExperimentConfig config_from_table(const toml::table& t, ExperimentConfig c = {}) {
  static const std::set<std::string> known{"experiment", "family", "k",      "h",       "seeds",     "x",
                                           "delta",      "T",      "grid",   "width",   "tau",       "scales",
                                           "ndirs",      "ntimes", "verdict_k", "lattice", "proxy_cutoff",
                                           "drift_check", "output"};
  for (const auto& [key, node] : t) {
    const std::string k(key.str());
    if (!known.count(k)) throw ConfigError(k + ": unknown key");
    if (k == "experiment") c.experiment = detail::toml_scalar<std::string>(node, k);
    else if (k == "family") c.family = detail::toml_scalar<std::string>(node, k);
    else if (k == "k") c.k = detail::toml_list<int>(node, k);
    else if (k == "h") c.h = detail::toml_list<double>(node, k);
    else if (k == "seeds") {
      for (auto v : detail::toml_list<std::int64_t>(node, k)) {
        if (v < 0) throw ConfigError("seeds: must be nonnegative");
        c.seeds.push_back(static_cast<std::uint64_t>(v));
      }
    } else if (k == "x") c.x = detail::toml_scalar<std::string>(node, k);
    else if (k == "delta") c.delta = detail::toml_scalar<double>(node, k);
    else if (k == "T") c.T = detail::toml_list<double>(node, k);
    else if (k == "grid") {
      const auto g = detail::toml_list<int>(node, k);
      if (g.size() != 3) throw ConfigError("grid: expected [n1, n2, nphi]");
      c.n1 = g[0];
      c.n2 = g[1];
      c.nphi = g[2];
    } else if (k == "width") c.width = detail::toml_scalar<double>(node, k);
    else if (k == "tau") c.tau = detail::toml_scalar<double>(node, k);
    else if (k == "scales") c.scales = detail::toml_list<double>(node, k);
    else if (k == "ndirs") c.ndirs = detail::toml_scalar<int>(node, k);
    else if (k == "ntimes") c.ntimes = detail::toml_scalar<int>(node, k);
    else if (k == "verdict_k") c.verdict_k = detail::toml_scalar<int>(node, k);
    else if (k == "lattice") c.lattice = detail::toml_scalar<int>(node, k);
    else if (k == "proxy_cutoff") c.proxy_cutoff = detail::toml_scalar<double>(node, k);
    else if (k == "drift_check") c.drift_check = detail::toml_scalar<bool>(node, k);
    else if (k == "output") c.output = detail::toml_scalar<std::string>(node, k);
  }
  return c;
}

inline ExperimentConfig config_from_toml_string(const std::string& text, ExperimentConfig c = {}) {
  try {
    return config_from_table(toml::parse(text), std::move(c));
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string("config: ") + std::string(e.description()));
  }
}

inline ExperimentConfig config_from_toml_file(const std::string& path, ExperimentConfig c = {}) {
  try {
    return config_from_table(toml::parse_file(path), std::move(c));
  } catch (const toml::parse_error& e) {
    throw ConfigError("config " + path + ": " + std::string(e.description()));
  }
}

}  // namespace eigenlab

#endif  // EIGENLAB_CONFIG_HPP
