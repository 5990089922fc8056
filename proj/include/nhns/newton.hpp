#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nhns/error.hpp"
#include "nhns/schemes.hpp"

namespace nhns {

struct NewtonConfig {
  double eps_tol = 1e-8;         // stop once the L2 update length drops below this
  std::size_t max_outer = 1000;  // Newton iteration cap
  double gmres_tol = 1e-10;      // relative residual target of each linear solve
  std::size_t gmres_restart = 50;
  std::size_t gmres_max_iter = 2000;

  void validate() const;
};

struct NewtonReport {
  std::size_t iterations = 0;
  std::vector<double> update_norms;
  std::vector<std::size_t> gmres_iters;
  std::vector<double> cumulative_time;  // seconds since the solve started, per iteration
  bool converged = false;
  double wall_time = 0.0;
};

/// CSV with header "k,l_update,gmres_iters,cumulative_time".
std::string newton_report_csv(const NewtonReport& report);

/// Matrix-free linear operator y = A x.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct GmresResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

class GmresError : public NumericalError {
 public:
  GmresError(const std::string& what, GmresResult best)
      : NumericalError(what), best_(std::move(best)) {}
  const GmresResult& best() const { return best_; }

 private:
  GmresResult best_;
};

/// Restarted GMRES (modified Gram-Schmidt, Givens rotations), zero initial
/// guess. Reaches ||A x - b|| <= gmres_tol ||b|| or throws GmresError with the
/// best iterate.
GmresResult gmres_solve(const LinearOperator& apply, std::span<const double> b, const NewtonConfig& cfg);

/// G(y) = y - Psi_tau(u_prev, y).
Field newton_function(const SchemeParams& params, const Field& u_prev, const Field& y);

/// D_y G(y) z = z - (tau/2) [eps^2 D_h z + (1 - 3 m^2) z], m = (u_prev + y) / 2.
Field jacobian_vector_product(const SchemeParams& params, const Field& u_prev, const Field& y, const Field& z);

class NewtonError : public NumericalError {
 public:
  NewtonError(const std::string& what, NewtonReport report)
      : NumericalError(what), report_(std::move(report)) {}
  const NewtonReport& report() const { return report_; }

 private:
  NewtonReport report_;
};

struct NewtonResult {
  Field solution;
  NewtonReport report;
};

/**
 * Newton iteration for G(y) = 0 starting at y0. Each step solves
 * D_y G(y) dy = -G(y) by GMRES and sets y += dy; the loop stops right after
 * the update whose L2 length falls below eps_tol, so the reported iteration
 * count equals the number of linear solves.
 */
NewtonResult newton_solve(const SchemeParams& params, const Field& u_prev, const Field& y0,
                          const NewtonConfig& cfg);

}  // namespace nhns
