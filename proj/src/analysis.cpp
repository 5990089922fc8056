#include "nhns/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nhns/io.hpp"

namespace nhns {

namespace {

std::vector<AsymptotePoint> fit_points(std::span<const AsymptotePoint> points, std::size_t fit_start) {
  std::vector<AsymptotePoint> out;
  for (const AsymptotePoint& p : points)
    if (p.converged && p.halvings >= fit_start && p.halvings > 0) out.push_back(p);
  return out;
}

}  // namespace

double fit_log2_constant(std::span<const AsymptotePoint> points, std::size_t fit_start) {
  const std::vector<AsymptotePoint> use = fit_points(points, fit_start);
  if (use.empty()) throw DomainError("no converged points in the fitted range");
  double acc = 0.0;
  for (const AsymptotePoint& p : use)
    acc += static_cast<double>(p.iterations) + std::log2(static_cast<double>(p.halvings));
  return acc / static_cast<double>(use.size());
}

double AsymptoteExperiment::fitted(std::size_t n) const {
  return c_tilde - std::log2(static_cast<double>(n));
}

double AsymptoteExperiment::max_fit_residual() const {
  double worst = 0.0;
  for (const AsymptotePoint& p : fit_points(points, fit_start))
    worst = std::max(worst, std::abs(static_cast<double>(p.iterations) - fitted(p.halvings)));
  return worst;
}

double AsymptoteExperiment::split_fit_change() const {
  const std::vector<AsymptotePoint> use = fit_points(points, fit_start);
  if (use.size() < 2) throw DomainError("need at least two fitted points to split");
  const std::size_t half = use.size() / 2;
  const std::span<const AsymptotePoint> all(use);
  return std::abs(fit_log2_constant(all.first(half), 0) - fit_log2_constant(all.subspan(half), 0));
}

long AsymptoteExperiment::max_increase() const {
  long worst = std::numeric_limits<long>::min();
  const AsymptotePoint* prev = nullptr;
  for (const AsymptotePoint& p : points) {
    if (!p.converged) continue;
    if (prev) worst = std::max(worst, static_cast<long>(p.iterations) - static_cast<long>(prev->iterations));
    prev = &p;
  }
  return worst == std::numeric_limits<long>::min() ? 0 : worst;
}

AsymptoteExperiment iteration_asymptote_experiment(const AsymptoteSetup& setup) {
  setup.newton.validate();
  NewtonConfig ref_cfg = setup.newton;
  ref_cfg.eps_tol = setup.reference_tol;
  const Field xi = newton_solve(setup.scheme, setup.u_prev, setup.u_prev, ref_cfg).solution;
  const Field offset = setup.u_prev - xi;

  AsymptoteExperiment e;
  e.base_error = norm_l2(offset);
  e.n_max = setup.n_max;
  e.fit_start = setup.fit_start;
  for (std::size_t n = 0; n <= setup.n_max; ++n) {
    const double scale = std::ldexp(1.0, -static_cast<int>(n));
    Field y0 = xi;
    for (std::size_t i = 0; i < y0.size(); ++i) y0[i] += scale * offset[i];
    AsymptotePoint p;
    p.halvings = n;
    p.initial_error = scale * e.base_error;
    try {
      const NewtonResult r = newton_solve(setup.scheme, setup.u_prev, y0, setup.newton);
      p.iterations = r.report.iterations;
      p.converged = true;
    } catch (const NewtonError& err) {
      p.iterations = err.report().iterations;
    }
    e.points.push_back(p);
  }
  e.c_tilde = fit_log2_constant(e.points, e.fit_start);
  return e;
}

std::string asymptote_csv(const AsymptoteExperiment& e) {
  std::ostringstream out;
  out << "n,M,fitted_value,residual\n";
  for (const AsymptotePoint& p : e.points) {
    out << p.halvings << ',';
    if (p.converged)
      out << p.iterations;
    out << ',';
    if (p.converged && p.halvings >= e.fit_start && p.halvings > 0) {
      const double f = e.fitted(p.halvings);
      out << format_double(f) << ',' << format_double(static_cast<double>(p.iterations) - f);
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

double quadratic_constant_probe(const NewtonReport& trace) {
  const std::vector<double>& l = trace.update_norms;
  if (l.size() < 3) throw DomainError("quadratic probe needs at least 3 Newton iterations");
  double worst = -1.0;
  for (std::size_t k = 0; k + 1 < l.size(); ++k) {
    if (!(l[k] <= kQuadraticTail) || !(l[k] > 0.0)) continue;
    worst = std::max(worst, l[k + 1] / (l[k] * l[k]));
  }
  if (worst < 0.0) throw DomainError("Newton trace never entered the quadratic tail");
  return worst;
}

void CoveringQuery::validate() const {
  if (d < 1) throw DomainError("dimension must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 4.0)) throw DomainError("epsilon must lie in (0, 4)");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw DomainError("Sobolev orders must be finite");
  if (!(alpha > beta + 2.0)) throw DomainError("need alpha > beta + 2");
  if (!(beta + 2.0 > 0.5 * d)) throw DomainError("need beta + 2 > d / 2");
}

CoveringResult covering_number(const CoveringQuery& q) {
  q.validate();
  CoveringResult r;
  const double d = static_cast<double>(q.d);
  r.exponent = 2.0 * d * std::pow(q.epsilon / 2.0, 1.0 / (q.beta + 2.0 - q.alpha)) + d;
  const long double ln_value = static_cast<long double>(r.exponent) * std::log(4.0L / q.epsilon);
  r.log10_value = static_cast<double>(ln_value / std::log(10.0L));
  constexpr long double kMax = 18446744073709551615.0L;
  if (ln_value > std::log(kMax)) return r;
  const long double v = std::exp(ln_value);
  const long double nearest = std::round(v);
  const long double c =
      std::abs(v - nearest) <= 1e-9L * std::max(1.0L, v) ? nearest : std::ceil(v);
  if (c > kMax) return r;
  r.value = static_cast<std::uint64_t>(c);
  return r;
}

}  // namespace nhns
