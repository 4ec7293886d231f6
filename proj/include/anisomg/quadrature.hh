#pragma once

/** @file quadrature.hh
    @brief Triangle quadrature rules on the reference triangle (0,0),(1,0),(0,1).

    Weights are normalized to sum to one, so the integral over a physical triangle
    is area * sum_q w_q f(x_q).
*/

#include "anisomg/types.hh"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace anisomg {

struct QuadPoint {
  double xi;
  double eta;
  double weight;
};

using TriangleRule = std::vector<QuadPoint>;

/// Six-point symmetric rule, exact for polynomials of degree 4.
inline TriangleRule degree4_rule()
{
  constexpr double a1 = 0.445948490915965, w1 = 0.223381589678011;
  constexpr double a2 = 0.091576213509771, w2 = 0.109951743655322;
  return {
      {a1, a1, w1}, {1 - 2 * a1, a1, w1}, {a1, 1 - 2 * a1, w1},
      {a2, a2, w2}, {1 - 2 * a2, a2, w2}, {a2, 1 - 2 * a2, w2},
  };
}

namespace detail {
/// Legendre polynomial P_n(x) and its derivative.
inline std::pair<double, double> legendre(int n, double x)
{
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}
} // namespace detail

/// Gauss-Legendre nodes and weights on [0,1].
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
  if (n < 1) throw ConfigError("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = detail::legendre(n, x).second;
    nodes[i] = 0.5 * (1.0 - x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

/// Collapsed (Duffy) tensor Gauss rule with n x n points, exact to degree 2n-2.
inline TriangleRule collapsed_gauss_rule(int n)
{
  std::vector<double> t, w;
  gauss_legendre(n, t, w);
  TriangleRule rule;
  rule.reserve(std::size_t(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rule.push_back({t[i], t[j] * (1.0 - t[i]), 2.0 * w[i] * w[j] * (1.0 - t[i])});
  return rule;
}

} // namespace anisomg
