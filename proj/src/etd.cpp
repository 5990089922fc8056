#include <algorithm>
#include <cmath>

#include "nhns/error.hpp"
#include "nhns/schemes.hpp"

namespace nhns {

EtdParams::EtdParams(const SchemeParams& scheme, std::size_t krylov_dim)
    : scheme_(scheme), krylov_dim_(krylov_dim) {
  if (krylov_dim < 1 || krylov_dim > scheme.grid().size())
    throw DomainError("krylov dimension must lie in [1, n^dim]");
}

ArnoldiBasis arnoldi(const LaplacianOp& op, double scale, std::span<const double> start,
                     std::size_t max_dim) {
  const auto n = static_cast<Eigen::Index>(op.grid().size());
  if (static_cast<Eigen::Index>(start.size()) != n) throw DimensionError("arnoldi start vector size");
  const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(max_dim, start.size()));

  ArnoldiBasis out;
  Eigen::Map<const Eigen::VectorXd> b(start.data(), n);
  out.beta = b.norm();
  if (out.beta == 0.0 || m == 0) {
    out.basis.resize(n, 0);
    out.hessenberg.resize(0, 0);
    return out;
  }

  Eigen::MatrixXd v(n, m + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  v.col(0) = b / out.beta;
  Eigen::VectorXd w(n);
  Eigen::Index built = m;
  for (Eigen::Index j = 0; j < m; ++j) {
    op.apply({v.col(j).data(), static_cast<std::size_t>(n)}, {w.data(), static_cast<std::size_t>(n)});
    w *= scale;
    const double w_norm = w.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i <= j; ++i) {
        const double c = v.col(i).dot(w);
        h(i, j) += c;
        w -= c * v.col(i);
      }
    const double next = w.norm();
    h(j + 1, j) = next;
    if (next <= 1e-14 * std::max(w_norm, 1e-300)) {
      built = j + 1;
      break;
    }
    v.col(j + 1) = w / next;
  }
  out.basis = v.leftCols(built);
  out.hessenberg = h.topLeftCorner(built, built);
  return out;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DimensionError("expm needs a square matrix");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  static constexpr double c[] = {1.0,          1.0 / 2.0,      5.0 / 44.0,       1.0 / 66.0,
                                 1.0 / 792.0,  1.0 / 15840.0,  1.0 / 665280.0};
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd x = a / std::ldexp(1.0, squarings);

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd num = c[0] * id;
  Eigen::MatrixXd den = c[0] * id;
  Eigen::MatrixXd power = id;
  for (int k = 1; k <= 6; ++k) {
    power = power * x;
    num += c[k] * power;
    den += ((k % 2) ? -c[k] : c[k]) * power;
  }
  Eigen::MatrixXd r = den.partialPivLu().solve(num);
  for (int s = 0; s < squarings; ++s) r = r * r;
  return r;
}

Eigen::VectorXd phi1_times_e1(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = m;
  aug(0, n) = 1.0;
  return expm(aug).col(n).head(n);
}

namespace {

enum class Kind { Exp, Phi1 };

// beta * V * f(H) e_1 for f = exp or phi_1, H the projection of scale * D_h.
Eigen::VectorXd krylov_apply(const LaplacianOp& op, double scale, std::span<const double> b,
                             std::size_t dim, Kind kind) {
  const ArnoldiBasis k = arnoldi(op, scale, b, dim);
  if (k.beta == 0.0) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXd coeffs =
      kind == Kind::Exp ? Eigen::VectorXd(expm(k.hessenberg).col(0)) : phi1_times_e1(k.hessenberg);
  return k.beta * (k.basis * coeffs);
}

}  // namespace

Field etd_step(const EtdParams& params, const Field& u, double step) {
  const SchemeParams& sp = params.scheme();
  if (!(u.grid() == sp.grid())) throw DimensionError("grid mismatch in etd_step");
  if (!(step > 0.0)) throw DomainError("ETD step must be positive");
  const double scale = step * sp.eps2();
  const Field g = reaction(u);
  const Eigen::VectorXd lin = krylov_apply(sp.laplacian(), scale, u.values(), params.krylov_dim(), Kind::Exp);
  const Eigen::VectorXd non =
      krylov_apply(sp.laplacian(), scale, g.values(), params.krylov_dim(), Kind::Phi1);
  Field out(u.grid());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out[i] = lin(ii) + step * non(ii);
  }
  return out;
}

Field etd_step(const EtdParams& params, const Field& u) { return etd_step(params, u, params.scheme().tau()); }

}  // namespace nhns
