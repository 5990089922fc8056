#include "nhns/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "nhns/io.hpp"

namespace nhns {

void DatasetSpec::validate() const {
  if (dim != 1 && dim != 2) throw DomainError("dataset dimension must be 1 or 2");
  if (n < 3) throw DomainError("dataset grid needs at least 3 points");
  if (total() == 0) throw DomainError("dataset must contain at least one sample");
  if (dim == 1 && modes == 0) throw DomainError("1D data needs at least one mode");
  if (dim == 2 && (m1 == 0 || m2 == 0)) throw DomainError("2D data needs at least one mode per axis");
  if (!(decay >= 0.0)) throw DomainError("decay rate must be non-negative");
}

CoefficientSource normal_coefficients(const DatasetSpec& spec) {
  const std::uint64_t seed = spec.seed;
  const std::size_t count = spec.coefficient_count();
  return [seed, count](std::size_t index, std::size_t attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> c(count);
    for (double& v : c) v = normal(rng);
    return c;
  };
}

Field synthesize_initial_data(const DatasetSpec& spec, std::span<const double> coeffs) {
  if (coeffs.size() != spec.coefficient_count()) throw DimensionError("wrong number of coefficients");
  const GridSpec g = spec.grid();
  const std::size_t n = g.n();
  Field u(g);
  if (spec.dim == 1) {
    const std::size_t modes = spec.modes;
    for (std::size_t x = 0; x < n; ++x) {
      const double xc = g.coord(x);
      double acc = 0.0;
      for (std::size_t i = 1; i <= modes; ++i) {
        const double damp = std::exp(-spec.decay * static_cast<double>(i));
        const double k = static_cast<double>(i);
        acc += damp * (coeffs[i - 1] * std::sin(k * xc) + coeffs[modes + i - 1] * std::cos(k * xc));
      }
      u[x] = acc;
    }
    return u;
  }

  const std::size_t m1 = spec.m1;
  const std::size_t m2 = spec.m2;
  const std::size_t block = m1 * m2;
  // Separable tables: sin/cos of mode i at node x.
  std::vector<double> s1(m1 * n), c1(m1 * n), s2(m2 * n), c2(m2 * n);
  for (std::size_t x = 0; x < n; ++x) {
    const double xc = g.coord(x);
    for (std::size_t i = 0; i < m1; ++i) {
      s1[i * n + x] = std::sin(static_cast<double>(i + 1) * xc);
      c1[i * n + x] = std::cos(static_cast<double>(i + 1) * xc);
    }
    for (std::size_t j = 0; j < m2; ++j) {
      s2[j * n + x] = std::sin(static_cast<double>(j + 1) * xc);
      c2[j * n + x] = std::cos(static_cast<double>(j + 1) * xc);
    }
  }
  for (std::size_t i = 0; i < m1; ++i)
    for (std::size_t j = 0; j < m2; ++j) {
      const double damp =
          spec.decay_2d ? std::exp(-spec.decay * static_cast<double>(i + j + 2)) : 1.0;
      const std::size_t c = i * m2 + j;
      const double a = damp * coeffs[c];
      const double b = damp * coeffs[block + c];
      const double cc = damp * coeffs[2 * block + c];
      const double d = damp * coeffs[3 * block + c];
      for (std::size_t x1 = 0; x1 < n; ++x1) {
        const double si = s1[i * n + x1];
        const double ci = c1[i * n + x1];
        for (std::size_t x2 = 0; x2 < n; ++x2) {
          const double sj = s2[j * n + x2];
          const double cj = c2[j * n + x2];
          u[x1 * n + x2] += a * si * sj + b * si * cj + cc * ci * sj + d * ci * cj;
        }
      }
    }
  return u;
}

Field generate_initial_data(const DatasetSpec& spec, std::size_t index, const CoefficientSource& source) {
  spec.validate();
  const CoefficientSource draw = source ? source : normal_coefficients(spec);
  for (std::size_t attempt = 0; attempt < 64; ++attempt) {
    Field u = synthesize_initial_data(spec, draw(index, attempt));
    const double peak = norm_linf(u);
    if (!(peak > 0.0) || !std::isfinite(peak)) continue;
    for (double& v : u.values()) v /= peak;
    return u;
  }
  throw NumericalError("initial data generator kept producing the zero field");
}

Field generate_initial_data_1d(const DatasetSpec& spec, std::size_t index) {
  if (spec.dim != 1) throw DomainError("generate_initial_data_1d needs a 1D spec");
  return generate_initial_data(spec, index);
}

Field generate_initial_data_2d(const DatasetSpec& spec, std::size_t index) {
  if (spec.dim != 2) throw DomainError("generate_initial_data_2d needs a 2D spec");
  return generate_initial_data(spec, index);
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  const CoefficientSource draw = normal_coefficients(spec);
  Dataset ds;
  ds.train.reserve(spec.n_train);
  ds.test.reserve(spec.n_test);
  for (std::size_t i = 0; i < spec.total(); ++i)
    (i < spec.n_train ? ds.train : ds.test).push_back(generate_initial_data(spec, i, draw));
  return ds;
}

namespace {

double squared_l2(const Field& r) {
  double acc = 0.0;
  for (double v : r.values()) acc += v * v;
  return r.grid().cell_volume() * acc;
}

}  // namespace

double loss(const SchemeParams& params, const ConvNet& net, std::span<const Field> batch) {
  if (batch.empty()) throw DomainError("loss needs a non-empty batch");
  const std::vector<Field> out = forward_batch(net, batch);
  double acc = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) acc += squared_l2(residual(params, batch[b], out[b]));
  return acc / static_cast<double>(batch.size());
}

Field loss_gradient_wrt_output(const SchemeParams& params, const Field& u_prev, const Field& v) {
  require_same_grid(u_prev, v, "loss_gradient_wrt_output");
  const Field r = residual(params, u_prev, v);
  const Field lap = params.laplacian().apply(r);
  const double half_tau = 0.5 * params.tau();
  const double e2 = params.eps2();
  const double w = 2.0 * v.grid().cell_volume();
  Field g(v.grid());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = 0.5 * (u_prev[i] + v[i]);
    g[i] = w * (half_tau * (e2 * lap[i] + (1.0 - 3.0 * m * m) * r[i]) - r[i]);
  }
  return g;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("epochs must be at least 1");
  if (!(lr0 > 0.0)) throw DomainError("learning rate must be positive");
  if (lr_halving_period < 1) throw DomainError("learning-rate halving period must be positive");
  if (batch_size < 1) throw DomainError("batch size must be positive");
  if (!(weight_decay >= 0.0)) throw DomainError("weight decay must be non-negative");
}

std::string history_csv(std::span<const EpochRecord> history) {
  std::ostringstream out;
  out << "epoch,lr,train_loss,test_loss,wall_time\n";
  for (const EpochRecord& r : history)
    out << r.epoch << ',' << format_double(r.lr) << ',' << format_double(r.train_loss) << ','
        << format_double(r.test_loss) << ',' << format_double(r.wall_time) << '\n';
  return out.str();
}

ResidualStats evaluate_residuals(const SchemeParams& params, const ConvNet& net, std::span<const Field> data,
                                 std::size_t chunk) {
  ResidualStats stats;
  if (data.empty()) return stats;
  chunk = std::max<std::size_t>(chunk, 1);
  double acc = 0.0;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const auto part = data.subspan(start, std::min(chunk, data.size() - start));
    const std::vector<Field> out = forward_batch(net, part);
    for (std::size_t b = 0; b < part.size(); ++b) {
      const double sq = squared_l2(residual(params, part[b], out[b]));
      acc += sq;
      stats.max_residual = std::max(stats.max_residual, std::sqrt(sq));
    }
  }
  stats.mean_loss = acc / static_cast<double>(data.size());
  return stats;
}

TrainResult train(ConvNet net, std::span<const Field> train_data, std::span<const Field> test_data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_data.empty()) throw DomainError("training set is empty");
  const GridSpec grid = train_data.front().grid();
  const SchemeParams params(cfg.tau, cfg.eps_interface, grid);

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  AdamState adam(net.parameter_count(), cfg.lr0, cfg.weight_decay);
  std::mt19937_64 rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{net, 0, {}};
  double best_score = std::numeric_limits<double>::infinity();
  ForwardCache cache;
  std::vector<Field> batch;
  std::vector<Field> grad_out;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.lr = scheduled_lr(cfg.lr0, epoch, cfg.lr_halving_period);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - b0);
      batch.clear();
      for (std::size_t i = 0; i < count; ++i) batch.push_back(train_data[order[b0 + i]]);
      const std::vector<Field> out = forward_batch(net, batch, &cache);
      grad_out.clear();
      const double inv = 1.0 / static_cast<double>(count);
      for (std::size_t i = 0; i < count; ++i) {
        epoch_loss += squared_l2(residual(params, batch[i], out[i]));
        Field g = loss_gradient_wrt_output(params, batch[i], out[i]);
        g *= inv;
        grad_out.push_back(std::move(g));
      }
      const std::vector<double> grads = backward(net, cache, grad_out);
      adam_step(net, grads, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = adam.lr;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.test_loss = test_data.empty() ? rec.train_loss
                                      : evaluate_residuals(params, net, test_data, cfg.batch_size).mean_loss;
    rec.wall_time = std::chrono::duration<double>(clock::now() - start).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.test_loss))
      throw TrainingError("training loss became non-finite", result.history);
    if (rec.test_loss < best_score) {
      best_score = rec.test_loss;
      result.best = net;
      result.best_epoch = rec.epoch;
    }
  }
  return result;
}

}  // namespace nhns
