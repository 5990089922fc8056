#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nhns/grid.hpp"

namespace nhns::test {

inline std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t count, double lo = -1.0,
                                          double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(count);
  for (double& x : v) x = dist(rng);
  return v;
}

inline Field random_field(const GridSpec& g, std::mt19937_64& rng, double amplitude = 1.0) {
  return Field(g, uniform_values(rng, g.size(), -amplitude, amplitude));
}

// Smooth field with a few low cosine modes, max|u| <= amplitude.
inline Field smooth_field(const GridSpec& g, std::mt19937_64& rng, double amplitude = 0.9) {
  std::vector<double> c = uniform_values(rng, 4);
  Field u(g);
  const std::size_t n = g.n();
  double peak = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coord(g.dim() == 1 ? i : i / n);
    const double y = g.dim() == 1 ? 0.0 : g.coord(i % n);
    u[i] = c[0] * std::cos(x) + c[1] * std::cos(2 * x + 0.3) + c[2] * std::cos(y) + c[3] * std::sin(x + y);
    peak = std::max(peak, std::abs(u[i]));
  }
  if (peak > 0) u *= amplitude / peak;
  return u;
}

inline double rel_diff(const Field& a, const Field& b) {
  return norm_l2(a - b) / std::max(norm_l2(b), 1e-300);
}

}  // namespace nhns::test
