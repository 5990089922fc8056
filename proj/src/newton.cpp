#include "nhns/newton.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "nhns/io.hpp"

namespace nhns {

void NewtonConfig::validate() const {
  if (!(eps_tol > 0.0) || !(gmres_tol > 0.0)) throw DomainError("Newton tolerances must be positive");
  if (max_outer < 1) throw DomainError("max_outer must be at least 1");
  if (gmres_restart < 1 || gmres_max_iter < 1) throw DomainError("GMRES limits must be positive");
}

std::string newton_report_csv(const NewtonReport& report) {
  std::ostringstream out;
  out << "k,l_update,gmres_iters,cumulative_time\n";
  for (std::size_t k = 0; k < report.iterations; ++k)
    out << (k + 1) << ',' << format_double(report.update_norms[k]) << ',' << report.gmres_iters[k] << ','
        << format_double(report.cumulative_time[k]) << '\n';
  return out.str();
}

GmresResult gmres_solve(const LinearOperator& apply, std::span<const double> b, const NewtonConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(b.size());
  const auto nn = b.size();
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  GmresResult result;
  result.x.assign(nn, 0.0);
  Eigen::Map<Eigen::VectorXd> x(result.x.data(), n);

  const double b_norm = rhs.norm();
  if (b_norm == 0.0) return result;

  const auto restart = static_cast<Eigen::Index>(cfg.gmres_restart);
  Eigen::MatrixXd v(n, restart + 1);
  Eigen::MatrixXd h(restart + 1, restart);
  Eigen::VectorXd g(restart + 1);
  Eigen::VectorXd cs(restart);
  Eigen::VectorXd sn(restart);
  Eigen::VectorXd w(n);
  Eigen::VectorXd r = rhs;
  double beta = b_norm;
  const double target = cfg.gmres_tol * b_norm;

  auto apply_to = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    apply({in.data(), nn}, {out.data(), nn});
  };

  while (true) {
    v.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    h.setZero();
    Eigen::Index k = 0;
    while (k < restart && result.iterations < cfg.gmres_max_iter) {
      const Eigen::VectorXd vk = v.col(k);
      apply_to(vk, w);
      for (Eigen::Index i = 0; i <= k; ++i) {
        h(i, k) = v.col(i).dot(w);
        w -= h(i, k) * v.col(i);
      }
      const double next = w.norm();
      h(k + 1, k) = next;
      for (Eigen::Index i = 0; i < k; ++i) {
        const double t = cs(i) * h(i, k) + sn(i) * h(i + 1, k);
        h(i + 1, k) = -sn(i) * h(i, k) + cs(i) * h(i + 1, k);
        h(i, k) = t;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs(k) = denom == 0.0 ? 1.0 : h(k, k) / denom;
      sn(k) = denom == 0.0 ? 0.0 : h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g(k + 1) = -sn(k) * g(k);
      g(k) = cs(k) * g(k);
      ++k;
      ++result.iterations;
      if (std::abs(g(k)) <= target || next == 0.0) break;
      v.col(k) = w / next;
    }
    const Eigen::VectorXd y =
        h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    x += v.leftCols(k) * y;

    Eigen::VectorXd ax(n);
    apply_to(Eigen::VectorXd(x), ax);
    r = rhs - ax;
    beta = r.norm();
    result.relative_residual = beta / b_norm;
    if (!std::isfinite(beta)) throw GmresError("GMRES produced a non-finite residual", result);
    if (beta <= target) return result;
    if (result.iterations >= cfg.gmres_max_iter)
      throw GmresError("GMRES did not reach the requested tolerance", result);
  }
}

Field newton_function(const SchemeParams& params, const Field& u_prev, const Field& y) {
  Field g = midpoint_map(params, u_prev, y);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = y[i] - g[i];
  return g;
}

namespace {

struct JacobianAction {
  const SchemeParams& params;
  std::vector<double> linear_coeff;  // 1 - 3 m^2
  mutable std::vector<double> lap;

  JacobianAction(const SchemeParams& p, const Field& u_prev, const Field& y)
      : params(p), linear_coeff(y.size()), lap(y.size()) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double m = 0.5 * (u_prev[i] + y[i]);
      linear_coeff[i] = 1.0 - 3.0 * m * m;
    }
  }

  void operator()(std::span<const double> z, std::span<double> out) const {
    params.laplacian().apply(z, lap);
    const double half_tau = 0.5 * params.tau();
    const double e2 = params.eps2();
    for (std::size_t i = 0; i < z.size(); ++i)
      out[i] = z[i] - half_tau * (e2 * lap[i] + linear_coeff[i] * z[i]);
  }
};

}  // namespace

Field jacobian_vector_product(const SchemeParams& params, const Field& u_prev, const Field& y, const Field& z) {
  require_same_grid(u_prev, y, "jacobian_vector_product");
  require_same_grid(y, z, "jacobian_vector_product");
  if (!(y.grid() == params.grid())) throw DimensionError("grid mismatch in jacobian_vector_product");
  Field out(z.grid());
  JacobianAction(params, u_prev, y)(z.values(), out.values());
  return out;
}

NewtonResult newton_solve(const SchemeParams& params, const Field& u_prev, const Field& y0,
                          const NewtonConfig& cfg) {
  cfg.validate();
  require_same_grid(u_prev, y0, "newton_solve");
  if (!(y0.grid() == params.grid())) throw DimensionError("grid mismatch in newton_solve");
  if (!y0.all_finite()) throw NewtonError("non-finite initial guess", {});

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  NewtonResult res{y0, {}};
  Field& y = res.solution;
  NewtonReport& rep = res.report;
  const double cell = params.grid().cell_volume();

  while (true) {
    Field rhs = newton_function(params, u_prev, y);
    rhs *= -1.0;
    const JacobianAction jac(params, u_prev, y);
    GmresResult step;
    try {
      step = gmres_solve(std::cref(jac), rhs.values(), cfg);
    } catch (const GmresError& e) {
      rep.wall_time = elapsed();
      throw NewtonError(std::string("linear solve failed: ") + e.what(), rep);
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] += step.x[i];
      sq += step.x[i] * step.x[i];
    }
    const double l_update = std::sqrt(cell * sq);
    ++rep.iterations;
    rep.update_norms.push_back(l_update);
    rep.gmres_iters.push_back(step.iterations);
    rep.cumulative_time.push_back(elapsed());

    if (!std::isfinite(l_update) || !y.all_finite()) {
      rep.wall_time = elapsed();
      throw NewtonError("Newton iterate diverged to non-finite values", rep);
    }
    if (l_update < cfg.eps_tol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= cfg.max_outer) {
      rep.wall_time = elapsed();
      throw NewtonError("Newton iteration exceeded max_outer", rep);
    }
  }
  rep.wall_time = elapsed();
  return res;
}

}  // namespace nhns
