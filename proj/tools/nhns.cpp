// nhns command-line tool: data generation, training, solves, benchmarks and theory experiments.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "nhns/analysis.hpp"
#include "nhns/config.hpp"
#include "nhns/error.hpp"
#include "nhns/hybrid.hpp"
#include "nhns/io.hpp"
#include "nhns/training.hpp"

namespace fs = std::filesystem;
using namespace nhns;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct UsageError : Error {
  using Error::Error;
};

void log(const std::string& msg) { std::cerr << "[nhns] " << msg << '\n'; }

// Flags that map onto config keys; values are applied after the file and environment layers.
struct Overrides {
  std::map<std::string, std::string> values;
  std::string config_file;

  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  Config resolve(const std::map<std::string, std::string>& preset = {}) const {
    Config c;
    for (const auto& [k, v] : preset) c.set(k, v);
    if (!config_file.empty()) c.merge_file(config_file);
    c.merge_env();
    for (const auto& [k, v] : values) c.set(k, v);
    std::istringstream dump(c.dump());
    std::string line;
    log("resolved config:");
    while (std::getline(dump, line)) std::cerr << "  " << line << '\n';
    return c;
  }
};

NewtonConfig newton_from(const Config& c) {
  NewtonConfig n;
  n.eps_tol = c.get_double("eps_tol");
  n.max_outer = c.get_size("max_outer");
  n.gmres_tol = c.get_double("gmres_tol");
  n.gmres_restart = c.get_size("gmres_restart");
  n.gmres_max_iter = c.get_size("gmres_max_iter");
  n.validate();
  return n;
}

DatasetSpec dataset_from(const Config& c) {
  DatasetSpec s;
  s.dim = c.get_int("dim");
  s.n = c.get_size("n");
  s.n_train = c.get_size("n_train");
  s.n_test = c.get_size("n_test");
  s.modes = c.get_size("modes");
  s.m1 = c.get_size("m1");
  s.m2 = c.get_size("m2");
  s.decay = c.get_double("decay");
  s.decay_2d = c.get_bool("decay_2d");
  s.seed = c.get_u64("seed");
  return s;
}

TrainConfig train_from(const Config& c) {
  TrainConfig t;
  t.epochs = c.get_size("epochs");
  t.lr0 = c.get_double("lr0");
  t.lr_halving_period = c.get_size("lr_halving_period");
  t.weight_decay = c.get_double("weight_decay");
  t.batch_size = c.get_size("batch_size");
  t.tau = c.get_double("tau");
  t.eps_interface = c.get_double("eps");
  t.shuffle_seed = c.get_u64("seed");
  return t;
}

ConvSpec net_from(const Config& c) {
  ConvSpec s;
  s.dim = c.get_int("dim");
  s.kernel = c.get_size("kernel");
  s.channels.clear();
  for (double v : c.get_doubles("channels")) {
    if (v < 1 || v != std::floor(v)) throw UsageError("channels must be positive integers");
    s.channels.push_back(static_cast<std::size_t>(v));
  }
  s.validate();
  return s;
}

std::shared_ptr<const ConvNet> load_net(const std::string& path, double tau, double eps) {
  Checkpoint ck = load_checkpoint_file(path);
  if (ck.meta.tau && std::abs(*ck.meta.tau - tau) > 1e-12 * std::max(1.0, tau))
    log("warning: checkpoint was trained with tau = " + format_double(*ck.meta.tau) + " but the solve uses tau = " +
        format_double(tau));
  if (ck.meta.eps_interface && std::abs(*ck.meta.eps_interface - eps) > 1e-12)
    log("warning: checkpoint was trained with eps = " + format_double(*ck.meta.eps_interface) +
        " but the solve uses eps = " + format_double(eps));
  return std::make_shared<const ConvNet>(std::move(ck.net));
}

Field sample_field(const Config& c, std::size_t index) {
  DatasetSpec s = dataset_from(c);
  return generate_initial_data(s, index);
}

const std::map<std::string, std::map<std::string, std::string>> kTrainPresets{
    {"desk1d", {{"dim", "1"}, {"n", "512"}, {"n_train", "256"}, {"n_test", "32"}, {"epochs", "50"}}},
    {"full1d", {{"dim", "1"}, {"n", "512"}, {"n_train", "3200"}, {"n_test", "320"}, {"epochs", "500"}}},
    {"full2d",
     {{"dim", "2"},
      {"n", "128"},
      {"eps", "0.02"},
      {"n_train", "3200"},
      {"n_test", "320"},
      {"epochs", "500"},
      {"kernel", "9"},
      {"channels", "1,16,32,64,32,16,1"}}},
};

int cmd_gen_data(const Overrides& o, const std::string& out, std::optional<std::size_t> count) {
  Config c = o.resolve();
  DatasetSpec s = dataset_from(c);
  if (count) {
    if (*count == 0) throw UsageError("--count must be positive");
    s.n_train = *count;
    s.n_test = 0;
  }
  const Dataset ds = generate_dataset(s);
  std::vector<Field> all = ds.train;
  all.insert(all.end(), ds.test.begin(), ds.test.end());
  save_dataset(out, all);
  double worst = 0.0;
  for (const Field& f : all) worst = std::max(worst, std::abs(norm_linf(f) - 1.0));
  std::cout << "count=" << all.size() << " dim=" << s.dim << " n=" << s.n << " max_norm_deviation=" << worst
            << " file=" << out << '\n';
  return 0;
}

int cmd_train(const Overrides& o, const std::string& preset, const std::string& out, const std::string& history,
              const std::string& data, const std::string& test_data) {
  std::map<std::string, std::string> base;
  if (!preset.empty()) {
    const auto it = kTrainPresets.find(preset);
    if (it == kTrainPresets.end()) throw UsageError("unknown preset " + preset);
    base = it->second;
  }
  if (preset == "desk1d" || preset == "full1d" || preset.empty()) {
    base.emplace("kernel", "21");
    base.emplace("channels", "1,8,16,32,64,32,16,8,1");
  }
  Config c = o.resolve(base);
  const TrainConfig tc = train_from(c);
  const ConvSpec spec = net_from(c);
  Dataset ds;
  if (!data.empty()) {
    ds.train = load_dataset(data);
    if (!test_data.empty()) ds.test = load_dataset(test_data);
  } else {
    ds = generate_dataset(dataset_from(c));
  }
  if (ds.train.front().grid().dim() != spec.dim) throw UsageError("dataset dimension does not match the network");
  const ConvNet init = ConvNet::random(spec, c.get_u64("seed"));
  log("training " + std::to_string(init.parameter_count()) + " parameters on " + std::to_string(ds.train.size()) +
      " samples");
  std::vector<EpochRecord> partial;
  try {
    const TrainResult r = train(init, ds.train, ds.test, tc, [&](const EpochRecord& e) {
      partial.push_back(e);
      std::cerr << "epoch " << e.epoch << " lr=" << format_double(e.lr) << " train=" << format_double(e.train_loss)
                << " test=" << format_double(e.test_loss) << " t=" << format_double(e.wall_time) << "s\n";
    });
    save_checkpoint_file(out, r.best, {tc.tau, tc.eps_interface});
    if (!history.empty()) write_text_file(history, history_csv(r.history));
    const double first = r.history.front().train_loss, last = r.history.back().train_loss;
    std::cout << "parameters=" << r.best.parameter_count() << " best_epoch=" << r.best_epoch
              << " initial_train_loss=" << format_double(first) << " final_train_loss=" << format_double(last)
              << " reduction=" << format_double(first / last) << " checkpoint=" << out << '\n';
  } catch (const TrainingError& e) {
    if (!history.empty()) write_text_file(history, history_csv(e.history()));
    throw;
  }
  return 0;
}

int cmd_predict(const Overrides& o, const std::string& ckpt, const std::string& input, const std::string& out,
                const std::string& csv) {
  Config c = o.resolve();
  const auto net = load_net(ckpt, c.get_double("tau"), c.get_double("eps"));
  const Field u = input.empty() ? sample_field(c, 0) : load_field(input);
  const Field v = forward(*net, u);
  if (!out.empty()) save_field(out, v);
  if (!csv.empty()) write_text_file(csv, field_to_csv(v));
  const SchemeParams p(c.get_double("tau"), c.get_double("eps"), u.grid());
  std::cout << "residual_l2=" << format_double(norm_l2(residual(p, u, v))) << " max_abs=" << format_double(norm_linf(v))
            << '\n';
  return 0;
}

int cmd_run(const Overrides& o, const std::string& strategy, const std::string& ckpt, const std::string& input,
            const std::string& out_dir, std::size_t index) {
  Config c = o.resolve();
  const Field u0 = input.empty() ? sample_field(c, index) : load_field(input);
  const SchemeParams p(c.get_double("tau"), c.get_double("eps"), u0.grid());
  const double t_end = c.get_double("t_end");
  const std::size_t every = c.get_size("record_every");
  RunReport r;
  if (strategy == "etd-pure") {
    r = run_etd(EtdParams(p, std::min(c.get_size("krylov_dim"), u0.size())), u0, t_end, every);
  } else {
    InitStrategy s = DirectGuess{};
    if (strategy == "neural") {
      if (ckpt.empty()) throw UsageError("--strategy neural needs --checkpoint");
      s = NeuralGuess{load_net(ckpt, p.tau(), p.eps_interface())};
    } else if (strategy == "etd") {
      s = EtdGuess{c.get_double("tau_etd"), c.get_size("krylov_dim")};
    } else if (strategy != "direct") {
      throw UsageError("unknown strategy " + strategy);
    }
    r = run({p, newton_from(c), s, t_end, every}, u0);
  }
  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "energy.csv", energy_csv(r));
  write_text_file(fs::path(out_dir) / "maxabs.csv", maxabs_csv(r));
  write_text_file(fs::path(out_dir) / "iters.csv", iters_csv(r));
  write_text_file(fs::path(out_dir) / "timing.csv", timing_csv(r));
  if (r.final_state) save_field(fs::path(out_dir) / "final.bin", *r.final_state);
  std::cout << "steps=" << r.steps.size() << " mean_iters=" << format_double(r.mean_iterations())
            << " final_energy=" << format_double(r.energy.back()) << " max_abs=" << format_double(r.max_abs.back())
            << " wall_time=" << format_double(r.wall_time) << '\n';
  if (!r.completed) {
    log("run stopped early: " + r.failure);
    return kExitNumerical;
  }
  return 0;
}

int cmd_bench(const Overrides& o, const std::vector<std::string>& strategies, const std::string& ckpt,
              const std::string& out, bool no_reference, std::size_t first_index) {
  Config c = o.resolve();
  BenchConfig b;
  b.dim = c.get_int("dim");
  b.n = c.get_size("n");
  b.eps_interface = c.get_double("eps");
  b.taus = c.get_doubles("taus");
  b.newton = newton_from(c);
  b.repetitions = c.get_size("repetitions");
  b.compute_reference = !no_reference;
  if (o.values.count("t_end")) b.t_end = c.get_double("t_end");
  const std::size_t seeds = c.get_size("seeds");
  if (seeds == 0) throw UsageError("seeds must be positive");
  for (std::size_t i = 0; i < seeds; ++i) b.initial_data.push_back(sample_field(c, first_index + i));
  for (const std::string& s : strategies) {
    if (s == "direct") {
      b.cases.push_back({s, DirectGuess{}});
    } else if (s == "etd") {
      // tau_etd follows each row's tau unless overridden.
      const double tau_etd = o.values.count("tau_etd") ? c.get_double("tau_etd") : 1e300;
      b.cases.push_back({s, EtdGuess{tau_etd, c.get_size("krylov_dim")}});
    } else if (s == "neural") {
      if (ckpt.empty()) throw UsageError("neural strategy needs --checkpoint");
      b.cases.push_back({s, NeuralGuess{load_net(ckpt, b.taus.front(), b.eps_interface)}});
    } else {
      throw UsageError("unknown strategy " + s);
    }
  }
  const std::vector<BenchRow> rows = bench(b);
  const std::string csv = bench_csv(rows);
  if (out.empty())
    std::cout << csv;
  else
    write_text_file(out, csv);
  return 0;
}

int cmd_asymptote(const Overrides& o, std::optional<std::size_t> nmax, const std::string& out, std::size_t index) {
  std::map<std::string, std::string> base;
  const auto dim_it = o.values.find("dim");
  if (dim_it != o.values.end() && dim_it->second == "2") base = {{"n", "128"}, {"eps", "0.02"}};
  Config c = o.resolve(base);
  const Field u = sample_field(c, index);
  AsymptoteSetup setup{SchemeParams(c.get_double("tau"), c.get_double("eps"), u.grid()), u};
  setup.n_max = nmax.value_or(u.grid().dim() == 1 ? 17 : 12);
  setup.newton = newton_from(c);
  const AsymptoteExperiment e = iteration_asymptote_experiment(setup);
  const std::string csv = asymptote_csv(e);
  if (out.empty())
    std::cout << csv;
  else
    write_text_file(out, csv);
  log("c_tilde=" + format_double(e.c_tilde) + " max_residual=" + format_double(e.max_fit_residual()) +
      " base_error=" + format_double(e.base_error));
  return 0;
}

int cmd_covering(int d, double alpha, double beta, double eps) {
  const CoveringResult r = covering_number({d, alpha, beta, eps});
  if (r.value)
    std::cout << *r.value << '\n';
  else
    std::cout << "exceeds 2^64-1; log10=" << format_double(r.log10_value) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-initialised Newton solver for the Allen-Cahn implicit midpoint scheme"};
  app.require_subcommand(1);
  Overrides ov;
  app.add_option("--config", ov.config_file, "flat key = value configuration file")->check(CLI::ExistingFile);

  auto common = [&](CLI::App* sub) {
    ov.bind(sub, "--seed", "seed", "global RNG seed");
    ov.bind(sub, "--dim", "dim", "spatial dimension (1 or 2)");
    ov.bind(sub, "--n", "n", "grid points per axis");
    ov.bind(sub, "--tau", "tau", "time step");
    ov.bind(sub, "--eps", "eps", "interfacial width");
  };
  auto newton_opts = [&](CLI::App* sub) {
    ov.bind(sub, "--eps-tol", "eps_tol", "Newton update tolerance");
    ov.bind(sub, "--gmres-tol", "gmres_tol", "GMRES relative tolerance");
    ov.bind(sub, "--gmres-restart", "gmres_restart", "GMRES restart length");
    ov.bind(sub, "--max-outer", "max_outer", "Newton iteration cap");
  };

  auto* gen = app.add_subcommand("gen-data", "generate random Fourier initial data");
  common(gen);
  std::string gen_out;
  std::optional<std::size_t> gen_count;
  gen->add_option("--out", gen_out, "dataset file")->required();
  gen->add_option("--count", gen_count, "number of samples (default n_train + n_test)");
  ov.bind(gen, "--modes", "modes", "1D Fourier modes");

  auto* tr = app.add_subcommand("train", "train the convolutional initial-guess network");
  common(tr);
  std::string preset, ck_out, hist_out, data_in, test_in;
  tr->add_option("--preset", preset, "desk1d | full1d | full2d")->check(CLI::IsMember({"desk1d", "full1d", "full2d"}));
  tr->add_option("--out", ck_out, "checkpoint file")->required();
  tr->add_option("--history", hist_out, "per-epoch CSV");
  tr->add_option("--data", data_in, "training dataset file (default: generate)");
  tr->add_option("--test-data", test_in, "test dataset file");
  ov.bind(tr, "--epochs", "epochs", "training epochs");
  ov.bind(tr, "--batch-size", "batch_size", "mini-batch size");
  ov.bind(tr, "--lr0", "lr0", "initial learning rate");
  ov.bind(tr, "--n-train", "n_train", "training samples");
  ov.bind(tr, "--n-test", "n_test", "test samples");

  auto* pr = app.add_subcommand("predict", "apply a checkpoint to one field");
  common(pr);
  std::string pr_ck, pr_in, pr_out, pr_csv;
  pr->add_option("--checkpoint", pr_ck, "checkpoint file")->required();
  pr->add_option("--input", pr_in, "field file (default: generated sample 0)");
  pr->add_option("--out", pr_out, "output field file");
  pr->add_option("--csv", pr_csv, "output CSV");

  auto* rn = app.add_subcommand("run", "march the implicit midpoint scheme to T");
  common(rn);
  newton_opts(rn);
  std::string strategy = "direct", rn_ck, rn_in, rn_out = "run_out";
  std::size_t rn_index = 0;
  rn->add_option("--strategy", strategy, "direct | neural | etd | etd-pure")
      ->check(CLI::IsMember({"direct", "neural", "etd", "etd-pure"}));
  rn->add_option("--checkpoint", rn_ck, "checkpoint for the neural strategy");
  rn->add_option("--input", rn_in, "initial field file (default: generated sample)");
  rn->add_option("--index", rn_index, "generated sample index");
  rn->add_option("--out-dir", rn_out, "directory for the CSV bundle");
  ov.bind(rn, "--T", "t_end", "final time");
  ov.bind(rn, "--record-every", "record_every", "steps between diagnostics");
  ov.bind(rn, "--tau-etd", "tau_etd", "ETD predictor substep");
  ov.bind(rn, "--krylov-dim", "krylov_dim", "Arnoldi basis size");

  auto* bn = app.add_subcommand("bench", "iteration counts and timings across strategies");
  common(bn);
  newton_opts(bn);
  std::vector<std::string> strategies{"direct", "etd"};
  std::string bn_ck, bn_out;
  bool no_ref = false;
  std::size_t bn_first = 0;
  bn->add_option("--strategies", strategies, "direct etd neural")->delimiter(',');
  bn->add_option("--checkpoint", bn_ck, "checkpoint for the neural strategy");
  bn->add_option("--out", bn_out, "CSV file (default stdout)");
  bn->add_option("--first-index", bn_first, "index of the first generated sample");
  bn->add_flag("--no-reference", no_ref, "skip the tau/32 reference solves");
  ov.bind(bn, "--taus", "taus", "comma-separated time steps");
  ov.bind(bn, "--seeds", "seeds", "number of initial data");
  ov.bind(bn, "--repetitions", "repetitions", "timing repetitions (median)");
  ov.bind(bn, "--T", "t_end", "final time (default one step)");
  ov.bind(bn, "--tau-etd", "tau_etd", "ETD predictor substep");
  ov.bind(bn, "--krylov-dim", "krylov_dim", "Arnoldi basis size");

  auto* th = app.add_subcommand("theory", "theory experiments");
  th->require_subcommand(1);
  auto* asy = th->add_subcommand("asymptote", "iteration count versus halved initial error");
  common(asy);
  newton_opts(asy);
  std::optional<std::size_t> nmax;
  std::string asy_out;
  std::size_t asy_index = 0;
  asy->add_option("--nmax", nmax, "number of halvings (default 17 in 1D, 12 in 2D)");
  asy->add_option("--out", asy_out, "CSV file (default stdout)");
  asy->add_option("--index", asy_index, "generated sample index");
  auto* cov = th->add_subcommand("covering", "covering number of the admissible input set");
  int cd = 1;
  double calpha = 0, cbeta = 0, ceps = 0;
  cov->add_option("--d", cd, "dimension")->required();
  cov->add_option("--alpha", calpha, "Sobolev order alpha")->required();
  cov->add_option("--beta", cbeta, "Sobolev order beta")->required();
  cov->add_option("--eps", ceps, "accuracy")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(ov, gen_out, gen_count);
    if (tr->parsed()) return cmd_train(ov, preset, ck_out, hist_out, data_in, test_in);
    if (pr->parsed()) return cmd_predict(ov, pr_ck, pr_in, pr_out, pr_csv);
    if (rn->parsed()) return cmd_run(ov, strategy, rn_ck, rn_in, rn_out, rn_index);
    if (bn->parsed()) return cmd_bench(ov, strategies, bn_ck, bn_out, no_ref, bn_first);
    if (asy->parsed()) return cmd_asymptote(ov, nmax, asy_out, asy_index);
    if (cov->parsed()) return cmd_covering(cd, calpha, cbeta, ceps);
  } catch (const UsageError& e) {
    log(std::string("error: ") + e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    log(std::string("I/O error: ") + e.what());
    return kExitIo;
  } catch (const FormatError& e) {
    log(std::string("format error: ") + e.what());
    return kExitIo;
  } catch (const NumericalError& e) {
    log(std::string("numerical failure: ") + e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    log(std::string("error: ") + e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
