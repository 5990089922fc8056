#include "nhns/hybrid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "nhns/io.hpp"

namespace nhns {

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string strategy_name(const InitStrategy& s) {
  return std::visit(overloaded{[](const DirectGuess&) { return std::string("direct"); },
                               [](const NeuralGuess&) { return std::string("neural"); },
                               [](const EtdGuess&) { return std::string("etd"); }},
                    s);
}

void validate_strategy(const InitStrategy& s, const GridSpec& grid) {
  std::visit(overloaded{[](const DirectGuess&) {},
                        [&](const NeuralGuess& g) {
                          if (!g.net) throw DomainError("neural strategy needs a network");
                          if (g.net->spec().dim != grid.dim())
                            throw DimensionError("checkpoint dimension does not match the grid");
                          if (g.net->spec().padding() >= grid.n())
                            throw DimensionError("grid too small for the checkpoint's padding");
                        },
                        [&](const EtdGuess& g) {
                          if (!(g.tau_etd > 0.0)) throw DomainError("tau_etd must be positive");
                          if (g.krylov_dim < 1) throw DomainError("krylov dimension must be positive");
                        }},
             s);
}

Field initial_guess(const InitStrategy& strategy, const SchemeParams& params, const Field& u_prev) {
  validate_strategy(strategy, u_prev.grid());
  return std::visit(
      overloaded{[&](const DirectGuess&) { return u_prev; },
                 [&](const NeuralGuess& g) { return forward(*g.net, u_prev); },
                 [&](const EtdGuess& g) {
                   const EtdParams etd(params, std::min(g.krylov_dim, u_prev.size()));
                   const double target = params.tau();
                   const auto substeps =
                       static_cast<std::size_t>(std::max(1.0, std::ceil(target / g.tau_etd - 1e-12)));
                   Field u = u_prev;
                   double t = 0.0;
                   for (std::size_t s = 0; s < substeps; ++s) {
                     const double h = s + 1 == substeps ? target - t : g.tau_etd;
                     u = etd_step(etd, u, h);
                     t += h;
                   }
                   return u;
                 }},
      strategy);
}

std::size_t RunConfig::step_count() const {
  const double ratio = t_end / scheme.tau();
  const double k = std::round(ratio);
  if (!(k >= 1.0) || std::abs(ratio - k) > 1e-12 * std::max(1.0, ratio))
    throw DomainError("t_end must be a positive integer multiple of tau");
  return static_cast<std::size_t>(k);
}

StepResult step(const RunConfig& cfg, const Field& u_prev) {
  const auto t0 = clock::now();
  Field guess = initial_guess(cfg.strategy, cfg.scheme, u_prev);
  const double guess_time = seconds_since(t0);
  NewtonResult nr = newton_solve(cfg.scheme, u_prev, guess, cfg.newton);
  return {std::move(nr.solution), std::move(nr.report), guess_time};
}

double RunReport::mean_iterations() const {
  if (steps.empty()) return 0.0;
  double acc = 0.0;
  for (const NewtonReport& s : steps) acc += static_cast<double>(s.iterations);
  return acc / static_cast<double>(steps.size());
}

RunReport run(const RunConfig& cfg, const Field& u0) {
  const std::size_t steps = cfg.step_count();
  validate_strategy(cfg.strategy, u0.grid());
  const std::size_t every = std::max<std::size_t>(cfg.record_every, 1);
  RunReport rep;
  const auto t0 = clock::now();
  auto record = [&](double t, const Field& u) {
    rep.record_times.push_back(t);
    rep.energy.push_back(energy(cfg.scheme, u));
    rep.max_abs.push_back(norm_linf(u));
  };
  Field u = u0;
  record(0.0, u);
  for (std::size_t k = 1; k <= steps; ++k) {
    try {
      StepResult s = step(cfg, u);
      rep.guess_times.push_back(s.guess_time);
      rep.guess_time += s.guess_time;
      rep.newton_time += s.report.wall_time;
      rep.steps.push_back(std::move(s.report));
      u = std::move(s.solution);
    } catch (const NewtonError& e) {
      rep.steps.push_back(e.report());
      rep.newton_time += e.report().wall_time;
      rep.failure = e.what();
      rep.wall_time = seconds_since(t0);
      rep.final_state = u;
      return rep;
    }
    if (k % every == 0 || k == steps) record(static_cast<double>(k) * cfg.scheme.tau(), u);
  }
  rep.wall_time = seconds_since(t0);
  rep.completed = true;
  rep.final_state = std::move(u);
  return rep;
}

RunReport run_etd(const EtdParams& params, const Field& u0, double t_end, std::size_t record_every) {
  const RunConfig shape{params.scheme(), {}, DirectGuess{}, t_end, record_every};
  const std::size_t steps = shape.step_count();
  const std::size_t every = std::max<std::size_t>(record_every, 1);
  RunReport rep;
  const auto t0 = clock::now();
  auto record = [&](double t, const Field& u) {
    rep.record_times.push_back(t);
    rep.energy.push_back(energy(params.scheme(), u));
    rep.max_abs.push_back(norm_linf(u));
  };
  Field u = u0;
  record(0.0, u);
  for (std::size_t k = 1; k <= steps; ++k) {
    u = etd_step(params, u);
    if (!u.all_finite()) {
      rep.failure = "ETD iterate became non-finite";
      break;
    }
    if (k % every == 0 || k == steps) record(static_cast<double>(k) * params.scheme().tau(), u);
  }
  rep.wall_time = seconds_since(t0);
  rep.guess_time = rep.wall_time;
  rep.completed = rep.failure.empty();
  rep.final_state = std::move(u);
  return rep;
}

namespace {

std::string series_csv(const char* column, const std::vector<double>& t, const std::vector<double>& v) {
  std::ostringstream out;
  out << "t," << column << '\n';
  for (std::size_t i = 0; i < v.size(); ++i) out << format_double(t[i]) << ',' << format_double(v[i]) << '\n';
  return out.str();
}

}  // namespace

std::string energy_csv(const RunReport& r) { return series_csv("energy", r.record_times, r.energy); }

std::string maxabs_csv(const RunReport& r) { return series_csv("max_abs", r.record_times, r.max_abs); }

std::string iters_csv(const RunReport& r) {
  std::ostringstream out;
  out << "step,iterations,gmres_iters,converged\n";
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    std::size_t gm = 0;
    for (std::size_t g : r.steps[k].gmres_iters) gm += g;
    out << (k + 1) << ',' << r.steps[k].iterations << ',' << gm << ',' << (r.steps[k].converged ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string timing_csv(const RunReport& r) {
  std::ostringstream out;
  out << "step,guess_time,newton_time\n";
  for (std::size_t k = 0; k < r.steps.size(); ++k)
    out << (k + 1) << ',' << format_double(k < r.guess_times.size() ? r.guess_times[k] : 0.0) << ','
        << format_double(r.steps[k].wall_time) << '\n';
  out << "total," << format_double(r.guess_time) << ',' << format_double(r.newton_time) << '\n';
  return out.str();
}

std::vector<BenchRow> bench(const BenchConfig& cfg) {
  if (cfg.initial_data.empty()) throw DomainError("bench needs initial data");
  const GridSpec grid(cfg.dim, cfg.n);
  for (const Field& u : cfg.initial_data)
    if (!(u.grid() == grid)) throw DimensionError("bench initial data does not match the grid");
  const std::size_t reps = std::max<std::size_t>(cfg.repetitions, 1);

  std::vector<BenchRow> rows;
  for (double tau : cfg.taus) {
    const SchemeParams scheme(tau, cfg.eps_interface, grid);
    const double t_end = cfg.t_end > 0.0 ? cfg.t_end : tau;

    std::vector<Field> reference;
    if (cfg.compute_reference) {
      const RunConfig ref_cfg{SchemeParams(tau / 32.0, cfg.eps_interface, grid), cfg.newton, DirectGuess{}, t_end,
                              std::numeric_limits<std::size_t>::max()};
      for (const Field& u0 : cfg.initial_data) {
        RunReport r = run(ref_cfg, u0);
        if (!r.completed) throw NumericalError("reference solve failed: " + r.failure);
        reference.push_back(*r.final_state);
      }
    }

    std::optional<double> direct_total;
    const std::size_t first_row = rows.size();
    for (const BenchCase& bc : cfg.cases) {
      const RunConfig rc{scheme, cfg.newton, bc.strategy, t_end, std::numeric_limits<std::size_t>::max()};
      BenchRow row;
      row.dim = cfg.dim;
      row.tau = tau;
      row.strategy = bc.label;
      std::size_t ok = 0;
      for (std::size_t s = 0; s < cfg.initial_data.size(); ++s) {
        std::vector<RunReport> runs;
        for (std::size_t k = 0; k < reps; ++k) runs.push_back(run(rc, cfg.initial_data[s]));
        if (!runs.front().completed) {
          ++row.failures;
          continue;
        }
        std::sort(runs.begin(), runs.end(), [](const RunReport& a, const RunReport& b) {
          return a.guess_time + a.newton_time < b.guess_time + b.newton_time;
        });
        const RunReport& med = runs[runs.size() / 2];
        ++ok;
        row.mean_iters += med.mean_iterations();
        row.mean_guess_time += med.guess_time;
        row.mean_newton_time += med.newton_time;
        row.mean_total_time += med.guess_time + med.newton_time;
        if (!reference.empty()) row.l2_error_vs_reference += norm_l2(*med.final_state - reference[s]);
      }
      if (ok > 0) {
        const double inv = 1.0 / static_cast<double>(ok);
        row.mean_iters *= inv;
        row.mean_guess_time *= inv;
        row.mean_newton_time *= inv;
        row.mean_total_time *= inv;
        row.l2_error_vs_reference *= inv;
      }
      if (std::holds_alternative<DirectGuess>(bc.strategy) && ok > 0) direct_total = row.mean_total_time;
      rows.push_back(row);
    }
    if (direct_total && *direct_total > 0.0)
      for (std::size_t i = first_row; i < rows.size(); ++i)
        rows[i].acceleration_rate = (*direct_total - rows[i].mean_total_time) / *direct_total;
  }
  return rows;
}

std::string bench_csv(std::span<const BenchRow> rows) {
  std::ostringstream out;
  out << "dim,tau,strategy,mean_iters,mean_guess_time,mean_newton_time,mean_total_time,l2_error_vs_reference,"
         "acceleration_rate,failures\n";
  for (const BenchRow& r : rows) {
    out << r.dim << ',' << format_double(r.tau) << ',' << r.strategy << ',' << format_double(r.mean_iters) << ','
        << format_double(r.mean_guess_time) << ',' << format_double(r.mean_newton_time) << ','
        << format_double(r.mean_total_time) << ',' << format_double(r.l2_error_vs_reference) << ',';
    if (r.acceleration_rate) out << format_double(*r.acceleration_rate);
    out << ',' << r.failures << '\n';
  }
  return out.str();
}

}  // namespace nhns
