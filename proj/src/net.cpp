#include "nhns/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "nhns/error.hpp"
#include "nhns/io.hpp"

namespace nhns {

std::size_t ConvSpec::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t q = 0; q < layers(); ++q) count += channels[q] * channels[q + 1] * taps() + channels[q + 1];
  return count;
}

void ConvSpec::validate() const {
  if (dim != 1 && dim != 2) throw DomainError("network dimension must be 1 or 2");
  if (kernel % 2 == 0) throw DomainError("kernel size must be odd");
  if (channels.size() < 2) throw DomainError("network needs at least one layer");
  if (channels.front() != 1 || channels.back() != 1)
    throw DomainError("first and last channel counts must be 1");
  if (std::any_of(channels.begin(), channels.end(), [](std::size_t c) { return c == 0; }))
    throw DomainError("channel counts must be positive");
  const std::size_t half = layers() / 2;
  for (std::size_t q = 0; q < half; ++q)
    if (channels[q + 1] < channels[q]) throw DomainError("channels must widen over the first half");
  for (std::size_t q = layers() - half; q < layers(); ++q)
    if (channels[q + 1] > channels[q]) throw DomainError("channels must narrow over the last half");
}

ConvSpec ConvSpec::full_1d() { return ConvSpec{1, 21, {1, 8, 16, 32, 64, 32, 16, 8, 1}}; }

ConvSpec ConvSpec::full_2d() { return ConvSpec{2, 9, {1, 16, 32, 64, 32, 16, 1}}; }

ConvNet::ConvNet(ConvSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t off = 0;
  for (std::size_t q = 0; q < spec_.layers(); ++q) {
    offsets_.push_back(off);
    off += spec_.channels[q] * spec_.channels[q + 1] * spec_.taps() + spec_.channels[q + 1];
  }
  offsets_.push_back(off);
  params_.assign(off, 0.0);
}

ConvNet ConvNet::random(ConvSpec spec, std::uint64_t seed) {
  ConvNet net(std::move(spec));
  std::mt19937_64 rng(seed);
  for (std::size_t q = 0; q < net.spec_.layers(); ++q) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.spec_.channels[q] * net.spec_.taps()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : net.layer_weights(q)) w = dist(rng);
    for (double& b : net.layer_biases(q)) b = dist(rng);
  }
  return net;
}

std::size_t ConvNet::bias_offset(std::size_t layer) const {
  return offsets_[layer] + spec_.channels[layer] * spec_.channels[layer + 1] * spec_.taps();
}

std::span<double> ConvNet::layer_weights(std::size_t layer) {
  return std::span<double>(params_).subspan(offsets_[layer], bias_offset(layer) - offsets_[layer]);
}
std::span<const double> ConvNet::layer_weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(offsets_[layer], bias_offset(layer) - offsets_[layer]);
}
std::span<double> ConvNet::layer_biases(std::size_t layer) {
  return std::span<double>(params_).subspan(bias_offset(layer), spec_.channels[layer + 1]);
}
std::span<const double> ConvNet::layer_biases(std::size_t layer) const {
  return std::span<const double>(params_).subspan(bias_offset(layer), spec_.channels[layer + 1]);
}

namespace {

// Source index of padded position i on an axis of length m.
inline std::size_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t m) {
  if (i < 0) return static_cast<std::size_t>(-i);
  if (i >= m) return static_cast<std::size_t>(2 * (m - 1) - i);
  return static_cast<std::size_t>(i);
}

}  // namespace

std::vector<double> reflect_pad_1d(std::span<const double> x, std::size_t p) {
  const auto m = static_cast<std::ptrdiff_t>(x.size());
  if (p >= x.size()) throw UnsupportedError("reflect padding must be smaller than the extent");
  const auto pp = static_cast<std::ptrdiff_t>(p);
  std::vector<double> out(x.size() + 2 * p);
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(out.size()); ++i)
    out[static_cast<std::size_t>(i)] = x[reflect_index(i - pp, m)];
  return out;
}

std::vector<double> reflect_pad_2d(std::span<const double> x, std::size_t m, std::size_t p) {
  if (x.size() != m * m) throw DimensionError("plane size does not match extent");
  if (p >= m) throw UnsupportedError("reflect padding must be smaller than the extent");
  const std::size_t mp = m + 2 * p;
  const auto mm = static_cast<std::ptrdiff_t>(m);
  const auto pp = static_cast<std::ptrdiff_t>(p);
  std::vector<double> out(mp * mp);
  for (std::size_t i = 0; i < mp; ++i) {
    const std::size_t si = reflect_index(static_cast<std::ptrdiff_t>(i) - pp, mm);
    for (std::size_t j = 0; j < mp; ++j)
      out[i * mp + j] = x[si * m + reflect_index(static_cast<std::ptrdiff_t>(j) - pp, mm)];
  }
  return out;
}

std::vector<double> correlate_1d(std::span<const double> w, std::span<const double> x) {
  if (w.empty() || w.size() > x.size()) throw DimensionError("kernel larger than plane");
  std::vector<double> out(x.size() - w.size() + 1, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t r = 0; r < w.size(); ++r) out[i] += w[r] * x[i + r];
  return out;
}

std::vector<double> correlate_2d(std::span<const double> w, std::size_t k, std::span<const double> x,
                                 std::size_t m) {
  if (w.size() != k * k || x.size() != m * m) throw DimensionError("kernel or plane size mismatch");
  if (k == 0 || k > m) throw DimensionError("kernel larger than plane");
  const std::size_t mo = m - k + 1;
  std::vector<double> out(mo * mo, 0.0);
  for (std::size_t i = 0; i < mo; ++i)
    for (std::size_t j = 0; j < mo; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t s = 0; s < k; ++s) acc += w[r * k + s] * x[(i + r) * m + j + s];
      out[i * mo + j] = acc;
    }
  return out;
}

namespace {

// Column budget for one im2col block, in doubles.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

// Geometry shared by the forward and backward passes of one layer.
struct LayerGeometry {
  int dim;
  std::size_t n;        // spatial extent per axis
  std::size_t k;        // kernel size per axis
  std::size_t p;        // padding
  std::size_t np;       // padded extent per axis
  std::size_t spatial;  // n^dim
  std::size_t padded;   // np^dim
  std::size_t taps;     // k^dim
  std::size_t lines_per_sample;

  LayerGeometry(const ConvSpec& spec, const GridSpec& grid)
      : dim(spec.dim),
        n(grid.n()),
        k(spec.kernel),
        p(spec.padding()),
        np(grid.n() + 2 * spec.padding()),
        spatial(grid.size()),
        padded(spec.dim == 1 ? np : np * np),
        taps(spec.taps()),
        lines_per_sample(spec.dim == 1 ? 1 : grid.n()) {}

  // Offset into a padded plane of tap t for output line `line_in_sample`.
  std::size_t tap_offset(std::size_t t, std::size_t line_in_sample) const {
    if (dim == 1) return t;
    return (line_in_sample + t / k) * np + t % k;
  }
};

// Pads every (sample, channel) plane of a [channels, batch * spatial] matrix.
std::vector<double> pad_all(const RowMatrix& x, std::size_t batch, const LayerGeometry& g) {
  const auto channels = static_cast<std::size_t>(x.rows());
  std::vector<double> out(batch * channels * g.padded);
  const auto n = static_cast<std::ptrdiff_t>(g.n);
  const auto p = static_cast<std::ptrdiff_t>(g.p);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = x.data() + c * static_cast<std::size_t>(x.cols()) + b * g.spatial;
      double* dst = out.data() + (b * channels + c) * g.padded;
      if (g.dim == 1) {
        for (std::size_t i = 0; i < g.np; ++i) dst[i] = src[reflect_index(static_cast<std::ptrdiff_t>(i) - p, n)];
      } else {
        for (std::size_t i = 0; i < g.np; ++i) {
          const double* row = src + reflect_index(static_cast<std::ptrdiff_t>(i) - p, n) * g.n;
          for (std::size_t j = 0; j < g.np; ++j) dst[i * g.np + j] = row[reflect_index(static_cast<std::ptrdiff_t>(j) - p, n)];
        }
      }
    }
  return out;
}

// Adjoint of pad_all: folds padded gradients back onto their mirror sources.
void unpad_all(const std::vector<double>& padded, std::size_t batch, std::size_t channels,
               const LayerGeometry& g, RowMatrix& out) {
  out.setZero(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(batch * g.spatial));
  const auto n = static_cast<std::ptrdiff_t>(g.n);
  const auto p = static_cast<std::ptrdiff_t>(g.p);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = padded.data() + (b * channels + c) * g.padded;
      double* dst = out.data() + c * static_cast<std::size_t>(out.cols()) + b * g.spatial;
      if (g.dim == 1) {
        for (std::size_t i = 0; i < g.np; ++i) dst[reflect_index(static_cast<std::ptrdiff_t>(i) - p, n)] += src[i];
      } else {
        for (std::size_t i = 0; i < g.np; ++i) {
          double* row = dst + reflect_index(static_cast<std::ptrdiff_t>(i) - p, n) * g.n;
          for (std::size_t j = 0; j < g.np; ++j) row[reflect_index(static_cast<std::ptrdiff_t>(j) - p, n)] += src[i * g.np + j];
        }
      }
    }
}

// Gathers im2col rows (channel, tap) for output lines [line0, line0 + lines).
void gather_columns(const std::vector<double>& padded, std::size_t channels, const LayerGeometry& g,
                    std::size_t line0, std::size_t lines, RowMatrix& col) {
  col.resize(static_cast<Eigen::Index>(channels * g.taps), static_cast<Eigen::Index>(lines * g.n));
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t t = 0; t < g.taps; ++t) {
      double* dst = col.data() + (c * g.taps + t) * lines * g.n;
      for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t line = line0 + l;
        const std::size_t b = line / g.lines_per_sample;
        const std::size_t in_sample = line % g.lines_per_sample;
        const double* src = padded.data() + (b * channels + c) * g.padded + g.tap_offset(t, in_sample);
        std::memcpy(dst + l * g.n, src, g.n * sizeof(double));
      }
    }
}

// Adjoint of gather_columns.
void scatter_columns(const RowMatrix& col, std::size_t channels, const LayerGeometry& g, std::size_t line0,
                     std::size_t lines, std::vector<double>& padded) {
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t t = 0; t < g.taps; ++t) {
      const double* src = col.data() + (c * g.taps + t) * lines * g.n;
      for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t line = line0 + l;
        const std::size_t b = line / g.lines_per_sample;
        const std::size_t in_sample = line % g.lines_per_sample;
        double* dst = padded.data() + (b * channels + c) * g.padded + g.tap_offset(t, in_sample);
        const double* s = src + l * g.n;
        for (std::size_t i = 0; i < g.n; ++i) dst[i] += s[i];
      }
    }
}

// Weights of layer q as the GEMM operand [c_out, c_in * taps].
RowMatrix gemm_weights(const ConvNet& net, std::size_t q) {
  const ConvSpec& s = net.spec();
  const std::size_t cin = s.channels[q];
  const std::size_t cout = s.channels[q + 1];
  const std::size_t taps = s.taps();
  const auto w = net.layer_weights(q);
  RowMatrix out(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin * taps));
  for (std::size_t j = 0; j < cin; ++j)
    for (std::size_t z = 0; z < cout; ++z)
      for (std::size_t t = 0; t < taps; ++t)
        out(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(j * taps + t)) = w[(j * cout + z) * taps + t];
  return out;
}

std::size_t lines_per_block(std::size_t rows, const LayerGeometry& g, std::size_t total_lines) {
  const std::size_t per_line = std::max<std::size_t>(1, rows * g.n);
  return std::clamp<std::size_t>(kColumnBudget / per_line, 1, total_lines);
}

void check_input(const ConvSpec& spec, const Field& u, const GridSpec& grid) {
  if (u.grid().dim() != spec.dim) throw DimensionError("field dimension does not match network");
  if (!(u.grid() == grid)) throw DimensionError("batch fields must share one grid");
  if (spec.padding() >= grid.n()) throw DimensionError("grid too small for the network's padding");
}

}  // namespace

std::vector<Field> forward_batch(const ConvNet& net, std::span<const Field> inputs, ForwardCache* cache) {
  if (inputs.empty()) return {};
  const ConvSpec& spec = net.spec();
  const GridSpec grid = inputs.front().grid();
  for (const Field& u : inputs) check_input(spec, u, grid);

  const std::size_t batch = inputs.size();
  const LayerGeometry g(spec, grid);
  const auto cols = static_cast<Eigen::Index>(batch * g.spatial);
  const std::size_t total_lines = batch * g.spatial / g.n;

  std::vector<RowMatrix> acts;
  acts.reserve(spec.layers() + 1);
  RowMatrix x(1, cols);
  for (std::size_t b = 0; b < batch; ++b)
    std::copy(inputs[b].values().begin(), inputs[b].values().end(), x.data() + b * g.spatial);
  acts.push_back(std::move(x));

  RowMatrix col;
  for (std::size_t q = 0; q < spec.layers(); ++q) {
    const std::size_t cin = spec.channels[q];
    const std::size_t cout = spec.channels[q + 1];
    const RowMatrix w = gemm_weights(net, q);
    const auto bias = net.layer_biases(q);
    const std::vector<double> padded = pad_all(acts.back(), batch, g);
    RowMatrix y(static_cast<Eigen::Index>(cout), cols);
    const std::size_t block = lines_per_block(cin * g.taps, g, total_lines);
    for (std::size_t line0 = 0; line0 < total_lines; line0 += block) {
      const std::size_t lines = std::min(block, total_lines - line0);
      gather_columns(padded, cin, g, line0, lines, col);
      y.middleCols(static_cast<Eigen::Index>(line0 * g.n), static_cast<Eigen::Index>(lines * g.n)).noalias() =
          w * col;
    }
    const bool last = q + 1 == spec.layers();
    for (std::size_t z = 0; z < cout; ++z) {
      double* row = y.data() + z * static_cast<std::size_t>(cols);
      const double bz = bias[z];
      if (last)
        for (Eigen::Index i = 0; i < cols; ++i) row[i] += bz;
      else
        for (Eigen::Index i = 0; i < cols; ++i) row[i] = std::tanh(row[i] + bz);
    }
    acts.push_back(std::move(y));
  }

  std::vector<Field> out;
  out.reserve(batch);
  const RowMatrix& last = acts.back();
  for (std::size_t b = 0; b < batch; ++b) {
    Field f(grid);
    std::copy(last.data() + b * g.spatial, last.data() + (b + 1) * g.spatial, f.data());
    out.push_back(std::move(f));
  }
  if (cache) {
    cache->grid = grid;
    cache->batch = batch;
    cache->activations = std::move(acts);
  }
  return out;
}

Field forward(const ConvNet& net, const Field& u) {
  return std::move(forward_batch(net, std::span<const Field>(&u, 1)).front());
}

std::vector<double> backward(const ConvNet& net, const ForwardCache& cache, std::span<const Field> grad_out) {
  if (cache.empty()) throw DomainError("backward called without cached activations");
  const ConvSpec& spec = net.spec();
  if (cache.activations.size() != spec.layers() + 1) throw DimensionError("cache does not match network");
  if (grad_out.size() != cache.batch) throw DimensionError("gradient batch size does not match cache");

  const std::size_t batch = cache.batch;
  const LayerGeometry g(spec, cache.grid);
  const auto cols = static_cast<Eigen::Index>(batch * g.spatial);
  const std::size_t total_lines = batch * g.spatial / g.n;

  std::vector<double> grads(net.parameter_count(), 0.0);

  // dz: gradient with respect to the pre-activation of the current layer.
  RowMatrix dz(1, cols);
  for (std::size_t b = 0; b < batch; ++b) {
    if (!(grad_out[b].grid() == cache.grid)) throw DimensionError("gradient grid does not match cache");
    std::copy(grad_out[b].values().begin(), grad_out[b].values().end(), dz.data() + b * g.spatial);
  }

  RowMatrix col;
  RowMatrix dcol;
  for (std::size_t qq = spec.layers(); qq-- > 0;) {
    const std::size_t cin = spec.channels[qq];
    const std::size_t cout = spec.channels[qq + 1];
    const RowMatrix w = gemm_weights(net, qq);
    const std::vector<double> padded = pad_all(cache.activations[qq], batch, g);
    const bool need_input_grad = qq > 0;
    std::vector<double> dpadded(need_input_grad ? padded.size() : 0, 0.0);

    RowMatrix dw = RowMatrix::Zero(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin * g.taps));
    const std::size_t block = lines_per_block(cin * g.taps, g, total_lines);
    for (std::size_t line0 = 0; line0 < total_lines; line0 += block) {
      const std::size_t lines = std::min(block, total_lines - line0);
      gather_columns(padded, cin, g, line0, lines, col);
      const auto dz_block =
          dz.middleCols(static_cast<Eigen::Index>(line0 * g.n), static_cast<Eigen::Index>(lines * g.n));
      dw.noalias() += dz_block * col.transpose();
      if (need_input_grad) {
        dcol.noalias() = w.transpose() * dz_block;
        scatter_columns(dcol, cin, g, line0, lines, dpadded);
      }
    }

    const std::size_t w_off = net.weight_offset(qq);
    for (std::size_t j = 0; j < cin; ++j)
      for (std::size_t z = 0; z < cout; ++z)
        for (std::size_t t = 0; t < g.taps; ++t)
          grads[w_off + (j * cout + z) * g.taps + t] =
              dw(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(j * g.taps + t));
    const std::size_t b_off = net.bias_offset(qq);
    for (std::size_t z = 0; z < cout; ++z) grads[b_off + z] = dz.row(static_cast<Eigen::Index>(z)).sum();

    if (!need_input_grad) break;
    RowMatrix dx;
    unpad_all(dpadded, batch, cin, g, dx);
    // Layer qq - 1 ends in tanh, whose derivative is 1 - a^2.
    const RowMatrix& a = cache.activations[qq];
    dz = dx.cwiseProduct((1.0 - a.array().square()).matrix());
  }
  return grads;
}

std::vector<double> backward(const ConvNet& net, const Field& u, const Field& grad_out) {
  ForwardCache cache;
  forward_batch(net, std::span<const Field>(&u, 1), &cache);
  return backward(net, cache, std::span<const Field>(&grad_out, 1));
}

AdamState::AdamState(std::size_t parameter_count, double lr_, double weight_decay_)
    : first_moment(parameter_count, 0.0),
      second_moment(parameter_count, 0.0),
      lr(lr_),
      weight_decay(weight_decay_) {}

double scheduled_lr(double lr0, std::size_t epoch, std::size_t halving_period) {
  return std::ldexp(lr0, -static_cast<int>(epoch / halving_period));
}

void adam_step(ConvNet& net, std::span<const double> grads, AdamState& state) {
  auto theta = net.parameters();
  if (grads.size() != theta.size() || state.first_moment.size() != theta.size() ||
      state.second_moment.size() != theta.size())
    throw DimensionError("Adam state does not match the parameter count");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double gi = grads[i] + state.weight_decay * theta[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * gi;
    v = state.beta2 * v + (1.0 - state.beta2) * gi * gi;
    theta[i] -= state.lr * (m / c1) / (std::sqrt(v / c2) + state.eps_adam);
  }
}

std::vector<std::uint8_t> save_checkpoint(const ConvNet& net, const CheckpointMeta& meta) {
  const ConvSpec& s = net.spec();
  ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put_u32(static_cast<std::uint32_t>(s.dim));
  w.put_u32(static_cast<std::uint32_t>(s.layers()));
  w.put_u32(static_cast<std::uint32_t>(s.kernel));
  w.put_u32(static_cast<std::uint32_t>(s.channels.size()));
  for (std::size_t c : s.channels) w.put_u32(static_cast<std::uint32_t>(c));
  w.put_f64s(net.parameters());
  if (meta.tau || meta.eps_interface) {
    w.put_bytes(kCheckpointMetaMagic);
    w.put_f64(meta.tau.value_or(std::nan("")));
    w.put_f64(meta.eps_interface.value_or(std::nan("")));
  }
  return w.take();
}

Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic(kCheckpointMagic, "checkpoint");
  ConvSpec spec;
  spec.dim = static_cast<int>(r.get_u32());
  const std::uint32_t layers = r.get_u32();
  spec.kernel = r.get_u32();
  const std::uint32_t nch = r.get_u32();
  if (nch != layers + 1) throw FormatError("channel list length does not match layer count");
  if (nch > 4096) throw FormatError("implausible channel list length");
  spec.channels.resize(nch);
  for (auto& c : spec.channels) c = r.get_u32();
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("invalid architecture in checkpoint: ") + e.what());
  }
  Checkpoint ck{ConvNet(spec), {}};
  r.get_f64s(ck.net.parameters());
  if (!r.at_end()) {
    r.expect_magic(kCheckpointMetaMagic, "checkpoint metadata");
    const double tau = r.get_f64();
    const double eps = r.get_f64();
    if (!std::isnan(tau)) ck.meta.tau = tau;
    if (!std::isnan(eps)) ck.meta.eps_interface = eps;
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
  }
  return ck;
}

void save_checkpoint_file(const std::filesystem::path& path, const ConvNet& net, const CheckpointMeta& meta) {
  write_file(path, save_checkpoint(net, meta));
}

Checkpoint load_checkpoint_file(const std::filesystem::path& path) { return load_checkpoint(read_file(path)); }

}  // namespace nhns
