#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nhns/grid.hpp"

namespace nhns {

/**
 * Architecture of the fully convolutional time stepper: L layers of
 * stride-1 cross-correlation with reflect padding (k - 1) / 2, tanh on
 * every layer except the last, and channel counts channels[0..L] that start
 * and end at 1.
 */
struct ConvSpec {
  int dim = 1;
  std::size_t kernel = 3;
  std::vector<std::size_t> channels{1, 1};

  std::size_t layers() const { return channels.size() - 1; }
  std::size_t padding() const { return (kernel - 1) / 2; }
  /// Kernel entries per (input, output) channel pair, k^dim.
  std::size_t taps() const { return dim == 1 ? kernel : kernel * kernel; }
  std::size_t parameter_count() const;

  /// Throws DomainError when an invariant is violated.
  void validate() const;

  /// 8 layers, k = 21, channels 1-8-16-32-64-32-16-8-1.
  static ConvSpec full_1d();
  /// 6 layers, k = 9x9, channels 1-16-32-64-32-16-1.
  static ConvSpec full_2d();

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

/// Parameters live in one flat vector. Layer q stores its weights as
/// [channels[q]][channels[q + 1]][taps] row-major, followed by its biases.
class ConvNet {
 public:
  explicit ConvNet(ConvSpec spec);

  /// Uniform init in +-1/sqrt(fan_in * taps) for weights and biases.
  static ConvNet random(ConvSpec spec, std::uint64_t seed);

  const ConvSpec& spec() const { return spec_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const;
  std::span<double> layer_weights(std::size_t layer);
  std::span<const double> layer_weights(std::size_t layer) const;
  std::span<double> layer_biases(std::size_t layer);
  std::span<const double> layer_biases(std::size_t layer) const;

 private:
  ConvSpec spec_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Mirror padding without edge repetition along one axis of length m.
std::vector<double> reflect_pad_1d(std::span<const double> x, std::size_t p);
/// Square m x m plane, row-major; each axis reflected, corners twice.
std::vector<double> reflect_pad_2d(std::span<const double> x, std::size_t m, std::size_t p);

/// Valid stride-1 cross-correlation, out[i] = sum_r w[r] x[i + r].
std::vector<double> correlate_1d(std::span<const double> w, std::span<const double> x);
/// Square kernel k x k over a square plane m x m, both row-major.
std::vector<double> correlate_2d(std::span<const double> w, std::size_t k, std::span<const double> x,
                                 std::size_t m);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Layer activations of one batched forward pass, kept for backward.
struct ForwardCache {
  GridSpec grid;
  std::size_t batch = 0;
  /// activations[q] is [channels[q], batch * n^dim]; activations[0] is the input.
  std::vector<RowMatrix> activations;

  bool empty() const { return activations.empty(); }
};

Field forward(const ConvNet& net, const Field& u);
/// Batched forward; fills cache when non-null.
std::vector<Field> forward_batch(const ConvNet& net, std::span<const Field> inputs, ForwardCache* cache = nullptr);

/// Gradient of sum_b <grad_out[b], forward(inputs[b])> with respect to every
/// parameter, in the flat parameter layout.
std::vector<double> backward(const ConvNet& net, const ForwardCache& cache, std::span<const Field> grad_out);
std::vector<double> backward(const ConvNet& net, const Field& u, const Field& grad_out);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step_count = 0;
  double lr = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  double weight_decay = 0.0;

  AdamState() = default;
  AdamState(std::size_t parameter_count, double lr, double weight_decay);
};

/// Step-decay schedule lr0 * 2^{-floor(epoch / period)}.
double scheduled_lr(double lr0, std::size_t epoch, std::size_t halving_period = 50);

/// Bias-corrected Adam with L2 weight decay folded into the gradient.
void adam_step(ConvNet& net, std::span<const double> grads, AdamState& state);

/// Optional run metadata stored after the parameter payload.
struct CheckpointMeta {
  std::optional<double> tau;
  std::optional<double> eps_interface;
};

struct Checkpoint {
  ConvNet net;
  CheckpointMeta meta;
};

inline constexpr std::string_view kCheckpointMagic = "NHNSNET1";
inline constexpr std::string_view kCheckpointMetaMagic = "NHNSMETA";

std::vector<std::uint8_t> save_checkpoint(const ConvNet& net, const CheckpointMeta& meta = {});
Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint_file(const std::filesystem::path& path, const ConvNet& net, const CheckpointMeta& meta = {});
Checkpoint load_checkpoint_file(const std::filesystem::path& path);

}  // namespace nhns
