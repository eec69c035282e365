#ifndef EIGENLAB_QUADRATURE_HPP
#define EIGENLAB_QUADRATURE_HPP

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "eigenlab/common.hpp"

namespace eigenlab {

struct GaussLegendre {
  std::vector<double> nodes;    // ascending in [-1, 1]
  std::vector<double> weights;  // sum to 2
};

namespace detail {

inline GaussLegendre build_gauss_legendre(unsigned n) {
  // boost returns the nonnegative zeros of P_n in ascending order
  const std::vector<double> pos = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
  GaussLegendre gl;
  gl.nodes.reserve(n);
  for (auto it = pos.rbegin(); it != pos.rend(); ++it)
    if (*it != 0.0) gl.nodes.push_back(-*it);
  for (double x : pos) gl.nodes.push_back(x);
  gl.weights.resize(gl.nodes.size());
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double x = gl.nodes[i];
    const double dp = boost::math::legendre_p_prime(static_cast<int>(n), x);
    gl.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return gl;
}

}  // namespace detail

// n-point rule, cached per n.
inline const GaussLegendre& gauss_legendre(unsigned n) {
  if (n == 0) throw QuadratureTooCoarse("Gauss-Legendre rule needs at least one node");
  static std::mutex mu;
  static std::map<unsigned, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendre>(detail::build_gauss_legendre(n));
  return *slot;
}

// Rule mapped onto [a, b].
inline GaussLegendre gauss_legendre(unsigned n, double a, double b) {
  GaussLegendre g = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (auto& x : g.nodes) x = mid + half * x;
  for (auto& w : g.weights) w *= half;
  return g;
}

}  // namespace eigenlab

#endif  // EIGENLAB_QUADRATURE_HPP
