#include "nhns/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nhns/error.hpp"

namespace nhns {

GridSpec::GridSpec(int dim, std::size_t n, double half_width)
    : dim_(dim), n_(n), half_width_(half_width) {
  if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
  if (n < 3) throw DomainError("grid needs at least 3 points per axis");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw DomainError("domain half width must be positive");
  h_ = 2.0 * half_width / static_cast<double>(n);
}

Field::Field(const GridSpec& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Field::Field(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw DimensionError("field has " + std::to_string(values_.size()) + " values, grid expects " +
                         std::to_string(grid_.size()));
  if (!all_finite()) throw DomainError("field contains non-finite values");
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other, "field addition");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other, "field subtraction");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_grid(const Field& a, const Field& b, const char* what) {
  if (!(a.grid() == b.grid()) || a.size() != b.size())
    throw DimensionError(std::string("grid mismatch in ") + what);
}

namespace {

// Lambda_h applied along a strided line of length n.
inline void neumann_line(const double* in, double* out, std::size_t n, std::size_t stride,
                         double inv_h2, bool accumulate) {
  auto put = [&](std::size_t i, double v) {
    if (accumulate)
      out[i * stride] += v;
    else
      out[i * stride] = v;
  };
  put(0, (in[stride] - in[0]) * inv_h2);
  for (std::size_t i = 1; i + 1 < n; ++i)
    put(i, (in[(i - 1) * stride] - 2.0 * in[i * stride] + in[(i + 1) * stride]) * inv_h2);
  put(n - 1, (in[(n - 2) * stride] - in[(n - 1) * stride]) * inv_h2);
}

}  // namespace

void LaplacianOp::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = grid_.n();
  if (in.size() != grid_.size() || out.size() != grid_.size())
    throw DimensionError("laplacian operand size does not match grid");
  const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
  if (grid_.dim() == 1) {
    neumann_line(in.data(), out.data(), n, 1, inv_h2, false);
    return;
  }
  // fast axis: rows of the row-major array
  for (std::size_t i = 0; i < n; ++i)
    neumann_line(in.data() + i * n, out.data() + i * n, n, 1, inv_h2, false);
  // slow axis: columns
  for (std::size_t j = 0; j < n; ++j)
    neumann_line(in.data() + j, out.data() + j, n, n, inv_h2, true);
}

Field LaplacianOp::apply(const Field& u) const {
  if (!(u.grid() == grid_)) throw DimensionError("grid mismatch in apply_laplacian");
  Field out(grid_);
  apply(u.values(), out.values());
  return out;
}

Eigen::MatrixXd LaplacianOp::assemble_dense() const {
  if (grid_.size() > kDenseCap)
    throw UnsupportedError("dense laplacian assembly is capped at 4096 unknowns");
  const auto n = static_cast<Eigen::Index>(grid_.n());
  const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) lambda(i, i - 1) = inv_h2;
    if (i + 1 < n) lambda(i, i + 1) = inv_h2;
    lambda(i, i) = -inv_h2 * ((i > 0) + (i + 1 < n));
  }
  if (grid_.dim() == 1) return lambda;

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * n, n * n);
  // I (x) Lambda acts within a row block, Lambda (x) I couples blocks.
  for (Eigen::Index b = 0; b < n; ++b) out.block(b * n, b * n, n, n) += lambda;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      if (lambda(a, b) == 0.0) continue;
      for (Eigen::Index k = 0; k < n; ++k) out(a * n + k, b * n + k) += lambda(a, b);
    }
  return out;
}

double norm_l2(const Field& u) {
  double acc = 0.0;
  for (double v : u.values()) acc += v * v;
  return std::sqrt(u.grid().cell_volume() * acc);
}

double norm_linf(const Field& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

double dot_l2(const Field& a, const Field& b) {
  require_same_grid(a, b, "dot_l2");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return a.grid().cell_volume() * acc;
}

namespace {

// C_m = sum_j u_j cos(pi m (j + 1/2) / n), m = 0..n-1.
Eigen::MatrixXd dct2_matrix(std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd c(nn, nn);
  for (Eigen::Index m = 0; m < nn; ++m)
    for (Eigen::Index j = 0; j < nn; ++j)
      c(m, j) = std::cos(std::numbers::pi * static_cast<double>(m) * (static_cast<double>(j) + 0.5) /
                         static_cast<double>(n));
  return c;
}

}  // namespace

double norm_hs(const Field& u, double s) {
  const GridSpec& g = u.grid();
  if (g.n() % 2 != 0) throw UnsupportedError("H^s norm requires an even number of points");
  if (!(s >= 0.0)) throw DomainError("H^s order must be non-negative");

  const std::size_t n = g.n();
  const auto nn = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd dct = dct2_matrix(n);
  // Physical wavenumber of cosine mode m on a domain of width 2a.
  const double k_unit = std::numbers::pi / (2.0 * g.half_width());
  auto bracket = [&](double k) { return k == 0.0 ? 1.0 : k; };
  auto mult = [](Eigen::Index m) { return m == 0 ? 1.0 : 2.0; };

  double acc = 0.0;
  if (g.dim() == 1) {
    Eigen::Map<const Eigen::VectorXd> v(u.data(), nn);
    const Eigen::VectorXd c = dct * v;
    for (Eigen::Index m = 0; m < nn; ++m) {
      const double k = k_unit * static_cast<double>(m);
      acc += mult(m) * std::pow(bracket(k), 2.0 * s) * c(m) * c(m);
    }
    return std::sqrt(g.h() / static_cast<double>(n) * acc);
  }

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> v(u.data(), nn, nn);
  const Eigen::MatrixXd c = dct * v * dct.transpose();
  for (Eigen::Index m1 = 0; m1 < nn; ++m1)
    for (Eigen::Index m2 = 0; m2 < nn; ++m2) {
      const double k = k_unit * std::hypot(static_cast<double>(m1), static_cast<double>(m2));
      acc += mult(m1) * mult(m2) * std::pow(bracket(k), 2.0 * s) * c(m1, m2) * c(m1, m2);
    }
  const double nd = static_cast<double>(n);
  return std::sqrt(g.cell_volume() / (nd * nd) * acc);
}

double norm(const Field& u, NormKind kind, double s) {
  switch (kind) {
    case NormKind::L2:
      return norm_l2(u);
    case NormKind::Linf:
      return norm_linf(u);
    case NormKind::Hs:
      return norm_hs(u, s);
  }
  throw DomainError("unknown norm kind");
}

}  // namespace nhns
