#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nhns/error.hpp"
#include "nhns/grid.hpp"
#include "support.hpp"

using namespace nhns;
using nhns::test::random_field;

namespace {

// Kronecker-sum oracle built from the 1D stencil, independent of LaplacianOp.
Eigen::MatrixXd lambda_1d(std::size_t n, double h) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      a(i, i - 1) = 1;
      a(i, i) -= 1;
    }
    if (i + 1 < n) {
      a(i, i + 1) = 1;
      a(i, i) -= 1;
    }
  }
  return a / (h * h);
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

// Even-extension H^s norm through an explicit cosine basis projection.
double hs_oracle_1d(const Field& u, double s) {
  const std::size_t n = u.size();
  const double a = u.grid().half_width();
  double total = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      c += u[j] * std::cos(std::numbers::pi * static_cast<double>(m) * (j + 0.5) / static_cast<double>(n));
    const double k = static_cast<double>(m) * std::numbers::pi / (2.0 * a);
    const double weight = m == 0 ? 1.0 : 2.0 * std::pow(k, 2.0 * s);
    total += weight * c * c;
  }
  return std::sqrt(u.grid().h() / static_cast<double>(n) * total);
}

}  // namespace

TEST_CASE("grid spec invariants") {
  const GridSpec g(1, 512);
  CHECK(g.h() * 512 == doctest::Approx(2 * std::numbers::pi).epsilon(1e-12));
  CHECK(g.coord(0) == doctest::Approx(-std::numbers::pi + g.h() / 2));
  CHECK_THROWS_AS(GridSpec(3, 8), DomainError);
  CHECK_THROWS_AS(GridSpec(1, 2), DomainError);
  CHECK(GridSpec(2, 8).size() == 64);
}

TEST_CASE("field rejects wrong length and non-finite values") {
  const GridSpec g(1, 4);
  CHECK_THROWS_AS(Field(g, std::vector<double>(5)), DimensionError);
  CHECK_THROWS_AS(Field(g, std::vector<double>{0, 1, NAN, 2}), DomainError);
  CHECK_THROWS_AS(Field(g) + Field(GridSpec(1, 5)), DimensionError);
}

TEST_CASE("laplacian annihilates constants") {
  for (int dim : {1, 2}) {
    const GridSpec g(dim, 7);
    const Field out = LaplacianOp(g).apply(Field(g, 3.25));
    CHECK(norm_linf(out) == 0.0);
  }
}

TEST_CASE("laplacian first column on the unit-spacing three-point grid") {
  const GridSpec g(1, 3, 1.5);  // h = 1
  REQUIRE(g.h() == 1.0);
  const Field out = LaplacianOp(g).apply(Field(g, {1, 0, 0}));
  CHECK(out[0] == -1.0);
  CHECK(out[1] == 1.0);
  CHECK(out[2] == 0.0);

  const Eigen::MatrixXd a = LaplacianOp(g).assemble_dense();
  Eigen::MatrixXd expect(3, 3);
  expect << -1, 1, 0, 1, -2, 1, 0, 1, -1;
  CHECK(a == expect);
}

TEST_CASE("dense assembly is symmetric with zero row sums") {
  const Eigen::MatrixXd a8 = LaplacianOp(GridSpec(1, 8)).assemble_dense();
  CHECK(a8 == a8.transpose());
  const Eigen::MatrixXd a2 = LaplacianOp(GridSpec(2, 3)).assemble_dense();
  CHECK(a2.rows() == 9);
  CHECK(a2 == a2.transpose());
  CHECK(a2.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(LaplacianOp(GridSpec(2, 65)).assemble_dense(), UnsupportedError);
}

TEST_CASE("matrix-free laplacian matches the Kronecker oracle") {
  std::mt19937_64 rng(11);
  for (int dim : {1, 2}) {
    for (std::size_t n : {4u, 5u, 16u}) {
      const GridSpec g(dim, n);
      const Eigen::MatrixXd l = lambda_1d(n, g.h());
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      const Eigen::MatrixXd oracle = dim == 1 ? l : Eigen::MatrixXd(kron(id, l) + kron(l, id));
      CHECK((LaplacianOp(g).assemble_dense() - oracle).cwiseAbs().maxCoeff() <= 1e-13 * oracle.cwiseAbs().maxCoeff());
      for (int trial = 0; trial < 5; ++trial) {
        const Field u = random_field(g, rng);
        const Field lu = LaplacianOp(g).apply(u);
        const Eigen::VectorXd ref = oracle * Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
        const double err = (Eigen::Map<const Eigen::VectorXd>(lu.data(), lu.size()) - ref).norm();
        CHECK(err <= 1e-13 * ref.norm());
      }
    }
  }
}

TEST_CASE("laplacian properties on random fields") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = trial % 2 + 1;
    const GridSpec g(dim, 3 + trial);
    const LaplacianOp op(g);
    const Field u = random_field(g, rng);
    const Field v = random_field(g, rng);
    const Field lu = op.apply(u);
    double sum = 0.0;
    for (double x : lu.values()) sum += x;
    CHECK(std::abs(sum) * g.cell_volume() <= 1e-11 * norm_l2(u) / (g.h() * g.h()));
    const double alpha = 0.7, beta = -1.3;
    const Field lhs = op.apply(alpha * u + beta * v);
    const Field rhs = alpha * op.apply(u) + beta * op.apply(v);
    CHECK(norm_l2(lhs - rhs) <= 1e-13 * (norm_l2(lhs) + 1.0));
    CHECK_THROWS_AS(op.apply(Field(GridSpec(dim, 2 + trial + 2))), DimensionError);
  }
}

TEST_CASE("norms of simple fields") {
  const GridSpec g(1, 64);
  const Field zero(g);
  CHECK(norm_l2(zero) == 0.0);
  CHECK(norm_linf(zero) == 0.0);
  CHECK(norm_hs(zero, 1.0) == 0.0);
  CHECK(norm_l2(Field(g, 1.0)) == doctest::Approx(std::sqrt(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(norm_l2(Field(GridSpec(2, 16), 1.0)) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("H^s norm of low cosine modes") {
  const GridSpec g(1, 512);
  Field c1(g), c2(g);
  for (std::size_t i = 0; i < g.n(); ++i) {
    c1[i] = std::cos(g.coord(i));
    c2[i] = std::cos(2 * g.coord(i));
  }
  const double root_pi = std::sqrt(std::numbers::pi);
  CHECK(norm_hs(c1, 1.0) == doctest::Approx(root_pi).epsilon(1e-10));
  CHECK(norm_hs(c1, 0.0) == doctest::Approx(root_pi).epsilon(1e-10));
  for (double s : {0.5, 1.0, 2.0}) CHECK(norm_hs(c2, s) == doctest::Approx(std::pow(2.0, s) * root_pi).epsilon(1e-10));
  CHECK(norm(c1, NormKind::Hs, 1.0) == norm_hs(c1, 1.0));
  CHECK(norm(c1, NormKind::Linf) == norm_linf(c1));
}

TEST_CASE("H^s agrees with the explicit cosine projection and H^0 with L2") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 6; ++trial) {
    const GridSpec g(1, 8 + 2 * static_cast<std::size_t>(trial));
    const Field u = random_field(g, rng);
    for (double s : {0.0, 0.5, 1.0, 1.7}) CHECK(norm_hs(u, s) == doctest::Approx(hs_oracle_1d(u, s)).epsilon(1e-10));
    CHECK(norm_hs(u, 0.0) == doctest::Approx(norm_l2(u)).epsilon(1e-10));
  }
  for (std::size_t n : {8u, 32u}) {
    const GridSpec g2(2, n);
    const Field u = nhns::test::smooth_field(g2, rng);
    CHECK(norm_hs(u, 0.0) == doctest::Approx(norm_l2(u)).epsilon(1e-10));
  }
}

TEST_CASE("H^s rejects odd grids and negative orders") {
  CHECK_THROWS_AS(norm_hs(Field(GridSpec(1, 9)), 1.0), UnsupportedError);
  CHECK_THROWS_AS(norm_hs(Field(GridSpec(1, 8)), -1.0), DomainError);
}

TEST_CASE("dot product is the h-weighted sum") {
  const GridSpec g(2, 4);
  const Field a(g, 2.0), b(g, 3.0);
  CHECK(dot_l2(a, b) == doctest::Approx(6.0 * 16 * g.cell_volume()));
}
