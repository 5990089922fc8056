#include "nhns/schemes.hpp"

#include <cmath>

#include "nhns/error.hpp"

namespace nhns {

SchemeParams::SchemeParams(double tau, double eps_interface, const GridSpec& grid)
    : SchemeParams(tau, eps_interface, grid, false) {}

SchemeParams::SchemeParams(double tau, double eps, const GridSpec& grid, bool allow_zero_tau)
    : tau_(tau), eps_(eps), lap_(grid) {
  if (!std::isfinite(tau) || tau < 0.0 || (tau == 0.0 && !allow_zero_tau))
    throw DomainError("time step must be positive");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("interfacial width must be positive");
}

SchemeParams SchemeParams::with_tau(double tau) const { return SchemeParams(tau, eps_, grid(), true); }

Field reaction(const Field& u) {
  Field g(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) g[i] = u[i] - u[i] * u[i] * u[i];
  return g;
}

Field allen_cahn_rhs(const SchemeParams& params, const Field& w) {
  if (!(w.grid() == params.grid())) throw DimensionError("grid mismatch in allen_cahn_rhs");
  Field out = params.laplacian().apply(w);
  const double e2 = params.eps2();
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = e2 * out[i] + w[i] - w[i] * w[i] * w[i];
  return out;
}

Field midpoint_map(const SchemeParams& params, const Field& u_prev, const Field& v) {
  require_same_grid(u_prev, v, "midpoint_map");
  Field mid(u_prev.grid());
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (u_prev[i] + v[i]);
  Field out = allen_cahn_rhs(params, mid);
  const double tau = params.tau();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = u_prev[i] + tau * out[i];
  return out;
}

Field residual(const SchemeParams& params, const Field& u_prev, const Field& v) {
  Field r = midpoint_map(params, u_prev, v);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= v[i];
  return r;
}

double energy(const SchemeParams& params, const Field& u) {
  const GridSpec& g = u.grid();
  if (!(g == params.grid())) throw DimensionError("grid mismatch in energy");
  const std::size_t n = g.n();
  const double h = g.h();
  double grad2 = 0.0;
  double potential = 0.0;
  for (double v : u.values()) potential += double_well(v);
  if (g.dim() == 1) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double d = u[i + 1] - u[i];
      grad2 += d * d;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j + 1 < n; ++j) {
        const double dx = u[i * n + j + 1] - u[i * n + j];
        const double dy = u[(j + 1) * n + i] - u[j * n + i];
        grad2 += dx * dx + dy * dy;
      }
  }
  return g.cell_volume() * (0.5 * params.eps2() * grad2 / (h * h) + potential);
}

double phi1_scalar(double z) {
  if (std::abs(z) > 1e-5) return std::expm1(z) / z;
  // 1 + z/2 + z^2/6 + ... + z^6/5040
  double term = 1.0;
  double sum = 1.0;
  for (int k = 2; k <= 7; ++k) {
    term *= z / k;
    sum += term;
  }
  return sum;
}

}  // namespace nhns
