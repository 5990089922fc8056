#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nhns/error.hpp"
#include "nhns/newton.hpp"
#include "nhns/schemes.hpp"
#include "support.hpp"

using namespace nhns;
using nhns::test::random_field;
using nhns::test::rel_diff;

namespace {

// ETD1 step evaluated through the eigendecomposition of the dense symmetric operator.
Field etd_dense_oracle(const SchemeParams& p, const Field& u, double tau) {
  const Eigen::MatrixXd a = p.eps2() * p.laplacian().assemble_dense();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd lam = es.eigenvalues();
  Eigen::VectorXd e(lam.size()), f(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double z = tau * lam(i);
    e(i) = std::exp(z);
    f(i) = z == 0.0 ? 1.0 : std::expm1(z) / z;
  }
  const Eigen::MatrixXd& q = es.eigenvectors();
  const Eigen::Map<const Eigen::VectorXd> uv(u.data(), u.size());
  Eigen::VectorXd g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) g(i) = u[i] - u[i] * u[i] * u[i];
  const Eigen::VectorXd out = q * (e.asDiagonal() * (q.transpose() * uv)) + tau * q * (f.asDiagonal() * (q.transpose() * g));
  return Field(u.grid(), std::vector<double>(out.data(), out.data() + out.size()));
}

// Straight-line midpoint map with the stencil written out by hand (1D).
std::vector<double> midpoint_loop_1d(double tau, double eps, double h, const std::vector<double>& a,
                                     const std::vector<double>& b) {
  const std::size_t n = a.size();
  std::vector<double> m(n), out(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = 0.5 * (a[i] + b[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? m[0] : m[i - 1];
    const double right = i + 1 == n ? m[n - 1] : m[i + 1];
    const double lap = (left - 2 * m[i] + right) / (h * h);
    out[i] = a[i] + tau * (eps * eps * lap + m[i] - m[i] * m[i] * m[i]);
  }
  return out;
}

Field tanh_profile(const GridSpec& g, double eps) {
  Field u(g);
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double x = g.coord(i);
    u[i] = std::tanh((x + 1.0) / (std::sqrt(2.0) * eps * 20)) * std::tanh((1.5 - x) / (std::sqrt(2.0) * eps * 20));
  }
  return u;
}

}  // namespace

TEST_CASE("scheme parameters validate") {
  const GridSpec g(1, 8);
  CHECK_THROWS_AS(SchemeParams(0.0, 0.01, g), DomainError);
  CHECK_THROWS_AS(SchemeParams(1.0, -0.01, g), DomainError);
  CHECK(SchemeParams(1.0, 0.01, g).with_tau(0.0).tau() == 0.0);
  CHECK_THROWS_AS(EtdParams(SchemeParams(1.0, 0.01, g), 0), DomainError);
  CHECK_THROWS_AS(EtdParams(SchemeParams(1.0, 0.01, g), 9), DomainError);
}

TEST_CASE("reaction term") {
  const GridSpec g(1, 5);
  CHECK(norm_linf(reaction(Field(g, 0.0))) == 0.0);
  CHECK(norm_linf(reaction(Field(g, 1.0))) == 0.0);
  const Field r = reaction(Field(g, 0.5));
  for (double v : r.values()) CHECK(v == 0.375);
}

TEST_CASE("midpoint map") {
  std::mt19937_64 rng(4);
  const GridSpec g(1, 16);
  const SchemeParams p(0.7, 0.3, g);
  SUBCASE("zero step leaves the previous state") {
    const Field u = random_field(g, rng), v = random_field(g, rng);
    CHECK(norm_linf(midpoint_map(p.with_tau(0.0), u, v) - u) == 0.0);
  }
  SUBCASE("equilibrium") {
    const Field one(g, 1.0);
    CHECK(norm_linf(midpoint_map(p, one, one) - one) == 0.0);
    CHECK(norm_linf(residual(p, one, one)) == 0.0);
  }
  SUBCASE("scalar loop oracle") {
    for (int trial = 0; trial < 10; ++trial) {
      const Field u = random_field(g, rng), v = random_field(g, rng);
      const std::vector<double> ref = midpoint_loop_1d(p.tau(), p.eps_interface(), g.h(),
                                                       {u.values().begin(), u.values().end()},
                                                       {v.values().begin(), v.values().end()});
      const Field got = midpoint_map(p, u, v);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    }
  }
  SUBCASE("swap identity") {
    for (int dim : {1, 2}) {
      const GridSpec gg(dim, 9);
      const SchemeParams pp(1.3, 0.05, gg);
      for (int trial = 0; trial < 10; ++trial) {
        const Field a = random_field(gg, rng), b = random_field(gg, rng);
        const Field lhs = midpoint_map(pp, a, b) - a;
        const Field rhs = midpoint_map(pp, b, a) - b;
        CHECK(norm_linf(lhs - rhs) <= 1e-14 * (1 + norm_linf(lhs)));
      }
    }
  }
  SUBCASE("grid mismatch") {
    CHECK_THROWS_AS(midpoint_map(p, Field(g), Field(GridSpec(1, 17))), DimensionError);
  }
}

TEST_CASE("residual") {
  std::mt19937_64 rng(8);
  const GridSpec g(1, 64);
  const SchemeParams p(1.0, 0.05, g);
  const Field u = test::smooth_field(g, rng);
  SUBCASE("reduces to tau L(u) at v = u") {
    const Field r = residual(p, u, u);
    const Field expect = p.tau() * allen_cahn_rhs(p, u);
    CHECK(norm_linf(r - expect) <= 1e-14 * norm_linf(expect));
  }
  SUBCASE("vanishes at the converged implicit step") {
    NewtonConfig cfg;
    cfg.eps_tol = 1e-12;
    const Field v = newton_solve(p, u, u, cfg).solution;
    CHECK(norm_l2(residual(p, u, v)) <= 1e-10);
  }
}

TEST_CASE("energy") {
  for (int dim : {1, 2}) {
    const GridSpec g(dim, 32);
    const SchemeParams p(1.0, 0.01, g);
    CHECK(energy(p, Field(g, 1.0)) == 0.0);
    CHECK(energy(p, Field(g, -1.0)) == 0.0);
    CHECK(energy(p, Field(g, 0.0)) == doctest::Approx(0.25 * std::pow(2 * std::numbers::pi, dim)).epsilon(1e-13));
  }
  SUBCASE("gradient term uses interior faces") {
    const GridSpec g(1, 4);
    const SchemeParams p(1.0, 1.0, g);
    const Field u(g, {1, 1, -1, -1});
    const double h = g.h();
    const double expect = h * (0.5 * (4.0 / (h * h)));
    CHECK(energy(p, u) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("dissipates along a midpoint trajectory") {
    const GridSpec g(1, 512);
    const SchemeParams p(0.5, 0.01, g);
    Field u = tanh_profile(g, 0.01);
    double e = energy(p, u);
    CHECK(e > 0.0);
    for (int k = 0; k < 6; ++k) {
      u = newton_solve(p, u, u, NewtonConfig{}).solution;
      const double next = energy(p, u);
      CHECK(next < e);
      e = next;
    }
  }
}

TEST_CASE("phi1 scalar") {
  CHECK(phi1_scalar(0.0) == 1.0);
  CHECK(phi1_scalar(1.0) == doctest::Approx(std::numbers::e - 1.0).epsilon(1e-15));
  CHECK(phi1_scalar(-50.0) == doctest::Approx((std::exp(-50.0) - 1.0) / -50.0).epsilon(1e-15));
  CHECK(phi1_scalar(-50.0) == doctest::Approx(0.02).epsilon(1e-12));
  for (double z : {1e-5, -1e-5, 3e-6, -7e-8, 1.0000001e-5, 2e-5}) {
    const double ref = std::expm1(z) / z;
    CHECK(phi1_scalar(z) == doctest::Approx(ref).epsilon(1e-15));
  }
}

TEST_CASE("dense matrix exponential") {
  Eigen::MatrixXd rot(2, 2);
  rot << 0, 2.0, -2.0, 0;
  const Eigen::MatrixXd e = expm(rot);
  CHECK(e(0, 0) == doctest::Approx(std::cos(2.0)).epsilon(1e-14));
  CHECK(e(0, 1) == doctest::Approx(std::sin(2.0)).epsilon(1e-14));
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd a(6, 6);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = test::uniform_values(rng, 1, -3, 3)[0];
    const Eigen::MatrixXd s = 0.5 * (a + a.transpose()) * 10.0;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const Eigen::MatrixXd ref =
        es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().transpose();
    CHECK((expm(s) - ref).norm() <= 1e-11 * ref.norm());
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d(0, 0) = -2.0;
  d(1, 1) = 0.0;
  d(2, 2) = 1e-9;
  const Eigen::VectorXd ph = phi1_times_e1(d);
  CHECK(ph(0) == doctest::Approx(std::expm1(-2.0) / -2.0).epsilon(1e-14));
  CHECK(std::abs(ph(1)) < 1e-15);
}

TEST_CASE("arnoldi basis is orthonormal and projects the operator") {
  std::mt19937_64 rng(12);
  const GridSpec g(1, 40);
  const LaplacianOp op(g);
  const Field start = random_field(g, rng);
  const ArnoldiBasis ab = arnoldi(op, 0.3, start.values(), 10);
  REQUIRE(ab.basis.cols() == 10);
  CHECK((ab.basis.transpose() * ab.basis - Eigen::MatrixXd::Identity(10, 10)).norm() < 1e-13);
  const Eigen::MatrixXd dense = 0.3 * op.assemble_dense();
  const Eigen::MatrixXd proj = ab.basis.transpose() * dense * ab.basis;
  CHECK((proj - ab.hessenberg.topLeftCorner(10, 10)).norm() <= 1e-12 * proj.norm());
  CHECK(ab.beta == doctest::Approx(Eigen::Map<const Eigen::VectorXd>(start.data(), 40).norm()));
}

TEST_CASE("etd step") {
  SUBCASE("zero field stays zero") {
    const GridSpec g(1, 32);
    const EtdParams e(SchemeParams(1.0, 0.01, g), 10);
    CHECK(norm_linf(etd_step(e, Field(g))) == 0.0);
  }
  SUBCASE("constant field triggers Arnoldi breakdown and stays exact") {
    const GridSpec g(2, 8);
    const EtdParams e(SchemeParams(0.8, 0.01, g), 10);
    const Field out = etd_step(e, Field(g, 0.5));
    for (double v : out.values()) CHECK(v == doctest::Approx(0.5 + 0.8 * 0.375).epsilon(1e-13));
  }
  SUBCASE("Krylov dimension 10 matches the dense oracle") {
    std::mt19937_64 rng(21);
    const GridSpec g(1, 64);
    const SchemeParams p(1.0, 0.01, g);
    for (int trial = 0; trial < 3; ++trial) {
      const Field u = random_field(g, rng);
      CHECK(rel_diff(etd_step(EtdParams(p, 10), u), etd_dense_oracle(p, u, 1.0)) <= 1e-8);
    }
  }
  SUBCASE("full Krylov dimension matches the dense oracle") {
    std::mt19937_64 rng(22);
    for (int dim : {1, 2}) {
      const GridSpec g(dim, dim == 1 ? 48 : 7);
      const SchemeParams p(0.6, 0.2, g);
      const Field u = random_field(g, rng);
      CHECK(rel_diff(etd_step(EtdParams(p, g.size()), u), etd_dense_oracle(p, u, 0.6)) <= 1e-12);
    }
  }
  SUBCASE("first-order convergence") {
    std::mt19937_64 rng(23);
    const GridSpec g(1, 64);
    const SchemeParams base(0.4, 0.1, g);
    const Field u0 = test::smooth_field(g, rng);
    const double t_end = 0.4;
    NewtonConfig tight;
    tight.eps_tol = 1e-12;
    const SchemeParams ref_p = base.with_tau(t_end / 400);
    Field ref = u0;
    for (int k = 0; k < 400; ++k) ref = newton_solve(ref_p, ref, ref, tight).solution;
    std::vector<double> errs;
    for (double tau : {0.2, 0.1, 0.05}) {
      const EtdParams e(base.with_tau(tau), 16);
      Field u = u0;
      for (int k = 0; k < static_cast<int>(std::lround(t_end / tau)); ++k) u = etd_step(e, u);
      errs.push_back(norm_l2(u - ref));
    }
    const double order = std::log2(errs[0] / errs[2]) / 2.0;
    CHECK(order >= 0.9);
    CHECK(order <= 1.5);
  }
  SUBCASE("substep size overload") {
    std::mt19937_64 rng(24);
    const GridSpec g(1, 32);
    const SchemeParams p(1.0, 0.05, g);
    const Field u = random_field(g, rng);
    CHECK(rel_diff(etd_step(EtdParams(p, 32), u, 0.25), etd_dense_oracle(p, u, 0.25)) <= 1e-12);
    CHECK_THROWS_AS(etd_step(EtdParams(p, 4), u, 0.0), DomainError);
  }
}
