#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nhns/error.hpp"
#include "nhns/net.hpp"
#include "nhns/schemes.hpp"

namespace nhns {

/// Random Fourier initial data. 1D:
///   u0 = sum_{i=1}^{modes} e^{-decay i} (a_i sin(ix) + b_i cos(ix)),
/// 2D: sum over i <= m1, j <= m2 of the four sin/cos tensor products, with an
/// optional e^{-decay (i + j)} factor. Every sample is scaled to max|u0| = 1.
struct DatasetSpec {
  int dim = 1;
  std::size_t n = 512;
  std::size_t n_train = 3200;
  std::size_t n_test = 320;
  std::size_t modes = 128;
  std::size_t m1 = 16;
  std::size_t m2 = 16;
  double decay = 0.25;
  bool decay_2d = false;
  std::uint64_t seed = 0;

  std::size_t total() const { return n_train + n_test; }
  GridSpec grid() const { return GridSpec(dim, n); }
  /// Number of normal coefficients drawn per sample.
  std::size_t coefficient_count() const { return dim == 1 ? 2 * modes : 4 * m1 * m2; }
  void validate() const;
};

/// Supplies the normal coefficients of sample `index`; `attempt` increases
/// each time a draw degenerates to the zero field.
using CoefficientSource = std::function<std::vector<double>(std::size_t index, std::size_t attempt)>;

/// Seeded N(0, 1) draws, one independent substream per (seed, index, attempt).
CoefficientSource normal_coefficients(const DatasetSpec& spec);

/// Unnormalised sum. Coefficient layout: 1D [a_1..a_M, b_1..b_M];
/// 2D [a, b, c, d] blocks each row-major over (i, j).
Field synthesize_initial_data(const DatasetSpec& spec, std::span<const double> coeffs);

Field generate_initial_data_1d(const DatasetSpec& spec, std::size_t index);
Field generate_initial_data_2d(const DatasetSpec& spec, std::size_t index);
/// Dispatches on spec.dim; `source` replaces the default normal draws.
Field generate_initial_data(const DatasetSpec& spec, std::size_t index, const CoefficientSource& source = {});

struct Dataset {
  std::vector<Field> train;
  std::vector<Field> test;
};

/// Samples 0..n_train-1 form the training split, the rest the test split.
Dataset generate_dataset(const DatasetSpec& spec);

/// Mean over the batch of ||Psi_tau(u, N(u)) - N(u)||^2 in the discrete L2 norm.
double loss(const SchemeParams& params, const ConvNet& net, std::span<const Field> batch);

/// Gradient of ||R(v)||^2 (discrete L2, weight h^dim) with respect to v:
/// 2 h^dim J r with r = R(v), J = (tau/2)(eps^2 D_h + diag(1 - 3m^2)) - I.
Field loss_gradient_wrt_output(const SchemeParams& params, const Field& u_prev, const Field& v);

struct TrainConfig {
  std::size_t epochs = 500;
  double lr0 = 4e-4;
  std::size_t lr_halving_period = 50;
  double weight_decay = 1e-7;
  std::size_t batch_size = 32;
  double tau = 1.0;
  double eps_interface = 0.01;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double wall_time = 0.0;
};

/// CSV with header "epoch,lr,train_loss,test_loss,wall_time".
std::string history_csv(std::span<const EpochRecord> history);

class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& what, std::vector<EpochRecord> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<EpochRecord>& history() const { return history_; }

 private:
  std::vector<EpochRecord> history_;
};

struct TrainResult {
  ConvNet best;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/**
 * Mini-batch Adam on the scheme-informed loss. Batches are drawn from a
 * seeded shuffle; the returned network is the one with the lowest test loss
 * (training loss when the test split is empty).
 */
TrainResult train(ConvNet net, std::span<const Field> train_data, std::span<const Field> test_data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Measurable error statistics of a trained stepper on a data split.
struct ResidualStats {
  double mean_loss = 0.0;      // mean squared residual norm
  double max_residual = 0.0;   // max_j ||R(N(u_j))||_L2
};

ResidualStats evaluate_residuals(const SchemeParams& params, const ConvNet& net, std::span<const Field> data,
                                 std::size_t chunk = 32);

}  // namespace nhns
