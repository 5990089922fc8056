#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nhns/newton.hpp"
#include "nhns/schemes.hpp"

namespace nhns {

struct AsymptotePoint {
  std::size_t halvings = 0;
  double initial_error = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct AsymptoteExperiment {
  double base_error = 0.0;  // ||u_prev - xi||_L2
  std::size_t n_max = 0;
  std::size_t fit_start = 4;
  std::vector<AsymptotePoint> points;
  /// M(n) ~ c_tilde - log2(n) on converged points with n >= fit_start.
  double c_tilde = 0.0;

  double fitted(std::size_t n) const;
  /// Largest |M(n) - fitted(n)| over the fitted range.
  double max_fit_residual() const;
  /// |c_tilde(lower half) - c_tilde(upper half)| of the fitted range.
  double split_fit_change() const;
  /// Largest increase M(n+1) - M(n) over consecutive converged points.
  long max_increase() const;
};

struct AsymptoteSetup {
  SchemeParams scheme;
  Field u_prev;
  std::size_t n_max = 17;
  std::size_t fit_start = 4;
  NewtonConfig newton;
  double reference_tol = 1e-12;
};

/**
 * Solves one step to reference_tol for xi, then restarts Newton from
 * xi + 2^-n (u_prev - xi) for n = 0..n_max. Points that fail to converge are
 * kept with converged == false and left out of the fit.
 */
AsymptoteExperiment iteration_asymptote_experiment(const AsymptoteSetup& setup);

/// Least-squares C for M(n) ~ C - log2(n): the mean of M(n) + log2(n).
double fit_log2_constant(std::span<const AsymptotePoint> points, std::size_t fit_start);

/// CSV "n,M,fitted_value,residual"; the fit columns are empty outside the fitted range.
std::string asymptote_csv(const AsymptoteExperiment& e);

/// Tail threshold of the quadratic probe.
inline constexpr double kQuadraticTail = 1e-2;

/// max l_{k+1} / l_k^2 over consecutive update norms with l_k <= 1e-2.
/// Throws DomainError on traces shorter than 3 iterations or without a tail.
double quadratic_constant_probe(const NewtonReport& trace);

struct CoveringQuery {
  int d = 1;
  double alpha = 4.0;
  double beta = 0.0;
  double epsilon = 1.0;

  void validate() const;
};

struct CoveringResult {
  /// Empty when the value exceeds 2^64 - 1.
  std::optional<std::uint64_t> value;
  double log10_value = 0.0;
  double exponent = 0.0;
};

/// ceil((4/eps)^(2d (eps/2)^(1/(beta+2-alpha)) + d)) evaluated in log space.
CoveringResult covering_number(const CoveringQuery& q);

}  // namespace nhns
