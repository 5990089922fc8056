#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nhns/analysis.hpp"
#include "nhns/error.hpp"
#include "nhns/hybrid.hpp"
#include "nhns/io.hpp"
#include "nhns/training.hpp"

namespace py = pybind11;
using namespace nhns;

namespace {

// Fields cross the boundary as float64 arrays: shape (n,) in 1D, (n, n) row-major in 2D.
py::array_t<double> to_array(const Field& u) {
  const GridSpec& g = u.grid();
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(g.n())};
  if (g.dim() == 2) shape.push_back(static_cast<py::ssize_t>(g.n()));
  py::array_t<double> out(shape);
  std::copy(u.data(), u.data() + u.size(), out.mutable_data());
  return out;
}

Field from_array(const GridSpec& g, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (static_cast<std::size_t>(a.size()) != g.size())
    throw DimensionError("array has " + std::to_string(a.size()) + " values, grid needs " + std::to_string(g.size()));
  return Field(g, std::vector<double>(a.data(), a.data() + a.size()));
}

Field field_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a, double half_width) {
  if (a.ndim() == 1) return from_array(GridSpec(1, a.shape(0), half_width), a);
  if (a.ndim() == 2 && a.shape(0) == a.shape(1)) return from_array(GridSpec(2, a.shape(0), half_width), a);
  throw DimensionError("expected a 1D array or a square 2D array");
}

py::dict report_dict(const NewtonReport& r) {
  py::dict d;
  d["iterations"] = r.iterations;
  d["update_norms"] = r.update_norms;
  d["gmres_iters"] = r.gmres_iters;
  d["cumulative_time"] = r.cumulative_time;
  d["converged"] = r.converged;
  d["wall_time"] = r.wall_time;
  return d;
}

}  // namespace

PYBIND11_MODULE(_nhns, m) {
  m.doc() = "Allen-Cahn implicit midpoint solver with neural and ETD initial guesses";

  static py::exception<Error> base(m, "NhnsError", PyExc_RuntimeError);
  static py::exception<DimensionError> dim_err(m, "DimensionError", base.ptr());
  static py::exception<DomainError> dom_err(m, "DomainError", base.ptr());
  static py::exception<UnsupportedError> uns_err(m, "UnsupportedError", base.ptr());
  static py::exception<FormatError> fmt_err(m, "FormatError", base.ptr());
  static py::exception<IoError> io_err(m, "IoError", base.ptr());
  static py::exception<NumericalError> num_err(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DimensionError& e) {
      py::set_error(dim_err, e.what());
    } catch (const DomainError& e) {
      py::set_error(dom_err, e.what());
    } catch (const UnsupportedError& e) {
      py::set_error(uns_err, e.what());
    } catch (const FormatError& e) {
      py::set_error(fmt_err, e.what());
    } catch (const IoError& e) {
      py::set_error(io_err, e.what());
    } catch (const NumericalError& e) {
      py::set_error(num_err, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<int, std::size_t, double>(), py::arg("dim"), py::arg("n"), py::arg("half_width") = std::numbers::pi)
      .def_property_readonly("dim", &GridSpec::dim)
      .def_property_readonly("n", &GridSpec::n)
      .def_property_readonly("h", &GridSpec::h)
      .def_property_readonly("half_width", &GridSpec::half_width)
      .def_property_readonly("size", &GridSpec::size)
      .def("__repr__", [](const GridSpec& g) {
        return "GridSpec(dim=" + std::to_string(g.dim()) + ", n=" + std::to_string(g.n()) + ")";
      });

  py::class_<Field>(m, "Field")
      .def(py::init([](const GridSpec& g, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
             return from_array(g, a);
           }),
           py::arg("grid"), py::arg("values"))
      .def(py::init<const GridSpec&, double>(), py::arg("grid"), py::arg("fill") = 0.0)
      .def_static("from_array", &field_from_array, py::arg("values"), py::arg("half_width") = std::numbers::pi)
      .def_property_readonly("grid", &Field::grid)
      .def("to_numpy", &to_array)
      .def("__len__", &Field::size)
      .def("__add__", [](const Field& a, const Field& b) { return a + b; })
      .def("__sub__", [](const Field& a, const Field& b) { return a - b; })
      .def("__rmul__", [](const Field& a, double s) { return s * a; })
      .def("__mul__", [](const Field& a, double s) { return s * a; });

  m.def("laplacian", [](const Field& u) { return LaplacianOp(u.grid()).apply(u); }, py::arg("u"));
  m.def("norm_l2", &norm_l2);
  m.def("norm_linf", &norm_linf);
  m.def("norm_hs", &norm_hs, py::arg("u"), py::arg("s"));
  m.def("dot_l2", &dot_l2);

  py::class_<SchemeParams>(m, "SchemeParams")
      .def(py::init<double, double, const GridSpec&>(), py::arg("tau"), py::arg("eps"), py::arg("grid"))
      .def_property_readonly("tau", &SchemeParams::tau)
      .def_property_readonly("eps", &SchemeParams::eps_interface)
      .def_property_readonly("grid", &SchemeParams::grid);
  m.def("midpoint_map", &midpoint_map, py::arg("params"), py::arg("u_prev"), py::arg("v"));
  m.def("residual", &residual, py::arg("params"), py::arg("u_prev"), py::arg("v"));
  m.def("energy", &energy, py::arg("params"), py::arg("u"));
  m.def(
      "etd_step",
      [](const SchemeParams& p, const Field& u, std::size_t krylov_dim) { return etd_step(EtdParams(p, krylov_dim), u); },
      py::arg("params"), py::arg("u"), py::arg("krylov_dim") = 10);

  py::class_<NewtonConfig>(m, "NewtonConfig")
      .def(py::init<>())
      .def_readwrite("eps_tol", &NewtonConfig::eps_tol)
      .def_readwrite("max_outer", &NewtonConfig::max_outer)
      .def_readwrite("gmres_tol", &NewtonConfig::gmres_tol)
      .def_readwrite("gmres_restart", &NewtonConfig::gmres_restart)
      .def_readwrite("gmres_max_iter", &NewtonConfig::gmres_max_iter);
  m.def(
      "newton_solve",
      [](const SchemeParams& p, const Field& u_prev, std::optional<Field> y0, const NewtonConfig& cfg) {
        NewtonResult r = newton_solve(p, u_prev, y0 ? *y0 : u_prev, cfg);
        return py::make_tuple(std::move(r.solution), report_dict(r.report));
      },
      py::arg("params"), py::arg("u_prev"), py::arg("y0") = py::none(), py::arg("config") = NewtonConfig{},
      "Solve one midpoint step; returns (solution, report dict).");

  py::class_<ConvSpec>(m, "ConvSpec")
      .def(py::init([](int dim, std::size_t kernel, std::vector<std::size_t> channels) {
             ConvSpec s;
             s.dim = dim;
             s.kernel = kernel;
             s.channels = std::move(channels);
             s.validate();
             return s;
           }),
           py::arg("dim"), py::arg("kernel"), py::arg("channels"))
      .def_static("full_1d", &ConvSpec::full_1d)
      .def_static("full_2d", &ConvSpec::full_2d)
      .def_readonly("dim", &ConvSpec::dim)
      .def_readonly("kernel", &ConvSpec::kernel)
      .def_readonly("channels", &ConvSpec::channels)
      .def("parameter_count", &ConvSpec::parameter_count);

  py::class_<ConvNet, std::shared_ptr<ConvNet>>(m, "ConvNet")
      .def_static("random", &ConvNet::random, py::arg("spec"), py::arg("seed"))
      .def_property_readonly("spec", &ConvNet::spec)
      .def("parameter_count", &ConvNet::parameter_count)
      .def("parameters",
           [](const ConvNet& n) {
             auto p = n.parameters();
             return py::array_t<double>(static_cast<py::ssize_t>(p.size()), p.data());
           })
      .def("save", [](const ConvNet& n, const std::filesystem::path& path, std::optional<double> tau,
                      std::optional<double> eps) { save_checkpoint_file(path, n, {tau, eps}); },
           py::arg("path"), py::arg("tau") = py::none(), py::arg("eps") = py::none())
      .def_static("load", [](const std::filesystem::path& path) { return load_checkpoint_file(path).net; });
  m.def("forward", py::overload_cast<const ConvNet&, const Field&>(&forward), py::arg("net"), py::arg("u"));

  py::class_<DatasetSpec>(m, "DatasetSpec")
      .def(py::init<>())
      .def_readwrite("dim", &DatasetSpec::dim)
      .def_readwrite("n", &DatasetSpec::n)
      .def_readwrite("n_train", &DatasetSpec::n_train)
      .def_readwrite("n_test", &DatasetSpec::n_test)
      .def_readwrite("modes", &DatasetSpec::modes)
      .def_readwrite("m1", &DatasetSpec::m1)
      .def_readwrite("m2", &DatasetSpec::m2)
      .def_readwrite("decay", &DatasetSpec::decay)
      .def_readwrite("seed", &DatasetSpec::seed);
  m.def(
      "generate_initial_data", [](const DatasetSpec& s, std::size_t index) { return generate_initial_data(s, index); },
      py::arg("spec"), py::arg("index"));
  m.def(
      "loss",
      [](const SchemeParams& p, const ConvNet& net, const std::vector<Field>& batch) { return loss(p, net, batch); },
      py::arg("params"), py::arg("net"), py::arg("batch"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("lr0", &TrainConfig::lr0)
      .def_readwrite("lr_halving_period", &TrainConfig::lr_halving_period)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("tau", &TrainConfig::tau)
      .def_readwrite("eps", &TrainConfig::eps_interface)
      .def_readwrite("shuffle_seed", &TrainConfig::shuffle_seed);
  m.def(
      "train",
      [](const ConvNet& net, const std::vector<Field>& train_data, const std::vector<Field>& test_data,
         const TrainConfig& cfg) {
        std::optional<TrainResult> res;
        {
          py::gil_scoped_release release;
          res.emplace(train(net, train_data, test_data, cfg));
        }
        TrainResult& r = *res;
        py::list hist;
        for (const EpochRecord& e : r.history)
          hist.append(py::dict(py::arg("epoch") = e.epoch, py::arg("lr") = e.lr, py::arg("train_loss") = e.train_loss,
                               py::arg("test_loss") = e.test_loss, py::arg("wall_time") = e.wall_time));
        return py::make_tuple(std::move(r.best), r.best_epoch, hist);
      },
      py::arg("net"), py::arg("train_data"), py::arg("test_data"), py::arg("config"),
      "Train with the residual loss; returns (best net, best epoch, history).");

  py::class_<CoveringResult>(m, "CoveringResult")
      .def_readonly("value", &CoveringResult::value)
      .def_readonly("log10_value", &CoveringResult::log10_value)
      .def_readonly("exponent", &CoveringResult::exponent);
  m.def(
      "covering_number",
      [](int d, double alpha, double beta, double eps) { return covering_number({d, alpha, beta, eps}); },
      py::arg("d"), py::arg("alpha"), py::arg("beta"), py::arg("eps"));

  m.def(
      "run",
      [](const SchemeParams& p, const Field& u0, double t_end, const std::string& strategy,
         std::shared_ptr<ConvNet> net, double tau_etd, std::size_t krylov_dim, const NewtonConfig& cfg,
         std::size_t record_every) {
        InitStrategy s = DirectGuess{};
        if (strategy == "neural") {
          if (!net) throw DomainError("neural strategy needs a network");
          s = NeuralGuess{std::move(net)};
        } else if (strategy == "etd") {
          s = EtdGuess{tau_etd, krylov_dim};
        } else if (strategy != "direct") {
          throw DomainError("unknown strategy " + strategy);
        }
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run({p, cfg, s, t_end, record_every}, u0);
        }
        py::dict d;
        py::list iters;
        for (const NewtonReport& nr : r.steps) iters.append(nr.iterations);
        d["iterations"] = iters;
        d["energy"] = r.energy;
        d["max_abs"] = r.max_abs;
        d["times"] = r.record_times;
        d["completed"] = r.completed;
        d["failure"] = r.failure;
        d["mean_iterations"] = r.mean_iterations();
        d["guess_time"] = r.guess_time;
        d["newton_time"] = r.newton_time;
        d["final_state"] = r.final_state ? py::cast(*r.final_state) : py::none();
        return d;
      },
      py::arg("params"), py::arg("u0"), py::arg("t_end"), py::arg("strategy") = "direct", py::arg("net") = nullptr,
      py::arg("tau_etd") = 1.0, py::arg("krylov_dim") = 10, py::arg("config") = NewtonConfig{},
      py::arg("record_every") = 1);
}
