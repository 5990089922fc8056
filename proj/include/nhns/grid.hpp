#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nhns {

/**
 * Uniform cell-centred mesh on [-a, a]^dim with homogeneous Neumann
 * boundaries. Node i sits at x_i = -a + (i + 1/2) h with h = 2a / n.
 */
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(int dim, std::size_t n, double half_width = std::numbers::pi);

  int dim() const { return dim_; }
  std::size_t n() const { return n_; }
  double h() const { return h_; }
  double half_width() const { return half_width_; }

  /// Number of unknowns, n^dim.
  std::size_t size() const { return dim_ == 1 ? n_ : n_ * n_; }
  /// Quadrature weight of one node, h^dim.
  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }
  /// Coordinate of node i along any axis.
  double coord(std::size_t i) const {
    return -half_width_ + (static_cast<double>(i) + 0.5) * h_;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_ && a.half_width_ == b.half_width_;
  }

 private:
  int dim_ = 1;
  std::size_t n_ = 3;
  double h_ = 2.0 * std::numbers::pi / 3.0;
  double half_width_ = std::numbers::pi;
};

/// Grid function. Values are row-major (index i * n + j) in 2D.
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& grid, double fill = 0.0);
  /// Throws DimensionError on a length mismatch and DomainError on
  /// non-finite entries.
  Field(const GridSpec& grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

  bool all_finite() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Throws DimensionError unless both fields live on the same grid.
void require_same_grid(const Field& a, const Field& b, const char* what);

/// Discrete Neumann Laplacian D_h: Lambda_h in 1D, I (x) Lambda_h + Lambda_h (x) I in 2D.
class LaplacianOp {
 public:
  static constexpr std::size_t kDenseCap = 4096;

  explicit LaplacianOp(const GridSpec& grid) : grid_(grid) {}

  const GridSpec& grid() const { return grid_; }

  /// out = D_h in. Both spans must have grid().size() entries.
  void apply(std::span<const double> in, std::span<double> out) const;
  Field apply(const Field& u) const;

  /// Explicit matrix, only for n^dim <= kDenseCap.
  Eigen::MatrixXd assemble_dense() const;

 private:
  GridSpec grid_;
};

inline Field apply_laplacian(const LaplacianOp& op, const Field& u) { return op.apply(u); }

enum class NormKind { L2, Linf, Hs };

/// sqrt(h^dim * sum u_i^2)
double norm_l2(const Field& u);
double norm_linf(const Field& u);
/**
 * Sobolev H^s diagnostic. The field is reflected evenly across the right
 * boundary, so its cosine coefficients C_m (DCT-II) are the discrete Fourier
 * data of a 4a-periodic function; mode m carries the physical wavenumber
 * m * pi / (2a). The norm is sqrt(sum <k>^{2s} |u_k|^2) with <0> = 1 and
 * coefficients scaled so that s = 0 reproduces norm_l2 exactly.
 * Requires even n and s >= 0.
 */
double norm_hs(const Field& u, double s);
double norm(const Field& u, NormKind kind, double s = 0.0);

double dot_l2(const Field& a, const Field& b);

}  // namespace nhns
