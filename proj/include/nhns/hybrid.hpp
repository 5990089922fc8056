#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nhns/net.hpp"
#include "nhns/newton.hpp"
#include "nhns/schemes.hpp"

namespace nhns {

/// Newton starts from the previous state.
struct DirectGuess {};

/// Newton starts from the network prediction N(u_prev).
struct NeuralGuess {
  std::shared_ptr<const ConvNet> net;
};

/// Newton starts from ETD1 substeps of size tau_etd that reach tau_midpoint.
struct EtdGuess {
  double tau_etd = 1.0;
  std::size_t krylov_dim = 10;
};

using InitStrategy = std::variant<DirectGuess, NeuralGuess, EtdGuess>;

std::string strategy_name(const InitStrategy& s);

/// Throws DomainError/DimensionError if the strategy cannot serve this grid.
void validate_strategy(const InitStrategy& s, const GridSpec& grid);

/// Initial Newton guess for the step u_prev -> u_next of size params.tau().
Field initial_guess(const InitStrategy& strategy, const SchemeParams& params, const Field& u_prev);

struct RunConfig {
  SchemeParams scheme;
  NewtonConfig newton;
  InitStrategy strategy = DirectGuess{};
  double t_end = 1.0;
  std::size_t record_every = 1;

  /// Number of steps; throws unless t_end / tau is a positive integer within 1e-12.
  std::size_t step_count() const;
};

struct StepResult {
  Field solution;
  NewtonReport report;
  double guess_time = 0.0;
};

/// One implicit midpoint step: initial guess followed by Newton.
StepResult step(const RunConfig& cfg, const Field& u_prev);

struct RunReport {
  std::vector<NewtonReport> steps;
  std::vector<double> guess_times;
  /// Time points, energy and max|u| recorded at t = 0, every record_every steps, and at t_end.
  std::vector<double> record_times;
  std::vector<double> energy;
  std::vector<double> max_abs;
  double guess_time = 0.0;
  double newton_time = 0.0;
  double wall_time = 0.0;
  bool completed = false;
  std::string failure;
  std::optional<Field> final_state;

  double mean_iterations() const;
};

/// Marches u0 to t_end. A Newton failure stops the march and leaves a partial
/// report with completed == false.
RunReport run(const RunConfig& cfg, const Field& u0);

/// Pure explicit ETD1 integrator (no Newton), recorded like run().
RunReport run_etd(const EtdParams& params, const Field& u0, double t_end, std::size_t record_every = 1);

/// CSV bundle written by the CLI.
std::string energy_csv(const RunReport& r);
std::string maxabs_csv(const RunReport& r);
std::string iters_csv(const RunReport& r);
std::string timing_csv(const RunReport& r);

struct BenchCase {
  std::string label;  // strategy column
  InitStrategy strategy;
};

struct BenchConfig {
  int dim = 1;
  std::size_t n = 512;
  double eps_interface = 0.01;
  std::vector<double> taus{0.5, 1.0, 2.0};
  double t_end = 0.0;  // 0 means a single step of size tau
  std::vector<BenchCase> cases;
  std::vector<Field> initial_data;
  NewtonConfig newton;
  std::size_t repetitions = 5;  // timings are medians over this many runs
  bool compute_reference = true;
};

struct BenchRow {
  int dim = 1;
  double tau = 0.0;
  std::string strategy;
  double mean_iters = 0.0;
  double mean_guess_time = 0.0;
  double mean_newton_time = 0.0;
  double mean_total_time = 0.0;
  double l2_error_vs_reference = 0.0;
  std::optional<double> acceleration_rate;  // (t_direct - t) / t_direct when a direct row exists
  std::size_t failures = 0;
};

std::vector<BenchRow> bench(const BenchConfig& cfg);
std::string bench_csv(std::span<const BenchRow> rows);

}  // namespace nhns
