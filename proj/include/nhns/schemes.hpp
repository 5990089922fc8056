#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "nhns/grid.hpp"

namespace nhns {

/// Time step, interfacial width and spatial operator of the Allen-Cahn problem
/// du/dt = eps^2 D_h u + u - u^3.
class SchemeParams {
 public:
  SchemeParams(double tau, double eps_interface, const GridSpec& grid);

  double tau() const { return tau_; }
  double eps_interface() const { return eps_; }
  double eps2() const { return eps_ * eps_; }
  const LaplacianOp& laplacian() const { return lap_; }
  const GridSpec& grid() const { return lap_.grid(); }

  /// Copy with a different time step; tau = 0 is allowed here for limit checks.
  SchemeParams with_tau(double tau) const;

 private:
  SchemeParams(double tau, double eps, const GridSpec& grid, bool allow_zero_tau);

  double tau_;
  double eps_;
  LaplacianOp lap_;
};

/// g(u) = u - u^3 pointwise.
Field reaction(const Field& u);

/// L(w) = eps^2 D_h w + w - w^3.
Field allen_cahn_rhs(const SchemeParams& params, const Field& w);

/// Psi_tau(u_prev, v) = u_prev + tau * L((u_prev + v) / 2).
Field midpoint_map(const SchemeParams& params, const Field& u_prev, const Field& v);

/// R(v) = Psi_tau(u_prev, v) - v; zero exactly at the implicit step's solution.
Field residual(const SchemeParams& params, const Field& u_prev, const Field& v);

/// Double-well potential F(u) = (u^2 - 1)^2 / 4.
inline double double_well(double u) {
  const double w = u * u - 1.0;
  return 0.25 * w * w;
}

/// Discrete Ginzburg-Landau energy h^d sum[(eps^2/2)|grad_h u|^2 + F(u)], with
/// forward differences on the n - 1 interior faces of each axis.
double energy(const SchemeParams& params, const Field& u);

/// phi_1(z) = (e^z - 1) / z, Taylor series near zero.
double phi1_scalar(double z);

class EtdParams {
 public:
  EtdParams(const SchemeParams& scheme, std::size_t krylov_dim);

  const SchemeParams& scheme() const { return scheme_; }
  std::size_t krylov_dim() const { return krylov_dim_; }

 private:
  SchemeParams scheme_;
  std::size_t krylov_dim_;
};

/// Orthonormal Krylov basis V (columns) and Hessenberg projection H = V^T A V.
struct ArnoldiBasis {
  Eigen::MatrixXd basis;
  Eigen::MatrixXd hessenberg;
  double beta = 0.0;  // Euclidean norm of the start vector
};

/// Arnoldi with modified Gram-Schmidt and one reorthogonalisation pass. The
/// basis is truncated early on breakdown.
ArnoldiBasis arnoldi(const LaplacianOp& op, double scale, std::span<const double> start,
                     std::size_t max_dim);

/// Dense exponential by Pade(6,6) with scaling and squaring.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// phi_1(M) e_1 via the exponential of the augmented matrix [[M, e_1], [0, 0]].
Eigen::VectorXd phi1_times_e1(const Eigen::MatrixXd& m);

/// One ETD1 step u <- e^{tau A} u + tau phi_1(tau A) g(u), A = eps^2 D_h,
/// with both matrix functions applied through Arnoldi projections.
Field etd_step(const EtdParams& params, const Field& u);

/// ETD step of arbitrary size h using the same Krylov machinery.
Field etd_step(const EtdParams& params, const Field& u, double step);

}  // namespace nhns
