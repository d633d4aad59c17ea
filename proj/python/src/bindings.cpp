#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "vafnet/architectures.hpp"
#include "vafnet/data.hpp"
#include "vafnet/errors.hpp"
#include "vafnet/eval.hpp"
#include "vafnet/experiment.hpp"
#include "vafnet/model_io.hpp"
#include "vafnet/network.hpp"
#include "vafnet/optim.hpp"
#include "vafnet/train.hpp"
#include "vafnet/vaf.hpp"

namespace py = pybind11;
using namespace vafnet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    return Matrix(1, static_cast<std::size_t>(a.shape(0)),
                  std::vector<double>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 2) throw ShapeError("expected a 1-D or 2-D array");
  return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

ActivationKind kind(const std::string& name) { return parse_activation(name); }

OptimizerState optimizer(const std::string& name, std::optional<double> lr) {
  if (!lr) {
    if (name == "sgd") return Sgd{};
    if (name == "adam") return Adam{};
    if (name == "rmsprop") return RmsProp{};
    if (name == "rprop") return Rprop{};
  }
  return make_optimizer(name, lr.value_or(0.0));
}

py::dict grad_dict(const VafGrad& g) {
  py::dict d;
  d["alpha"] = g.d_alpha;
  d["alpha0"] = g.d_alpha0;
  d["beta"] = g.d_beta;
  d["beta0"] = g.d_beta0;
  return d;
}

Network build_arch(const std::string& arch, std::size_t input_dim, std::size_t output_dim,
                   const std::string& g, bool shared, const std::string& init,
                   const std::string& fixed, std::uint64_t seed) {
  const auto spec = make_layers(parse_architecture(arch), input_dim, output_dim,
                                VafOptions{kind(g), shared}, kind(fixed));
  const InitMode mode = init == "random" ? InitMode::random() : InitMode::specific(kind(init));
  return build(spec, mode, seed);
}

struct PyOptimizer {
  OptimizerState state;
};

std::string run_command(void (*cmd)(const ExperimentConfig&, std::ostream&),
                        const std::string& config_json) {
  std::ostringstream log;
  cmd(config_from_json_text(config_json), log);
  return log.str();
}

}  // namespace

PYBIND11_MODULE(_vafnet, m) {
  m.doc() = "Feed-forward networks with trainable variable activation functions";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  static py::exception<ShapeError> shape_error(m, "ShapeError", PyExc_ValueError);
  static py::exception<TapeError> tape_error(m, "TapeError", error.ptr());
  static py::exception<ApproximationError> approx_error(m, "ApproximationError", error.ptr());
  static py::exception<DivergenceError> divergence_error(m, "DivergenceError",
                                                         PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DivergenceError& e) {
      py::set_error(divergence_error, e.what());
    } catch (const ApproximationError& e) {
      py::set_error(approx_error, e.what());
    } catch (const TapeError& e) {
      py::set_error(tape_error, e.what());
    } catch (const ShapeError& e) {
      py::set_error(shape_error, e.what());
    } catch (const InputError& e) {
      py::set_error(input_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("act", [](const std::string& g, double x) { return act(kind(g), x); }, py::arg("g"),
        py::arg("x"));
  m.def("act_deriv", [](const std::string& g, double x) { return act_deriv(kind(g), x); },
        py::arg("g"), py::arg("x"));

  py::class_<VafParams>(m, "VafParams")
      .def(py::init([](const std::string& g, std::vector<double> alpha, std::vector<double> alpha0,
                       std::vector<double> beta, double beta0) {
             VafParams p{kind(g), std::move(alpha), std::move(alpha0), std::move(beta), beta0};
             validate(p);
             return p;
           }),
           py::arg("g"), py::arg("alpha"), py::arg("alpha0"), py::arg("beta"),
           py::arg("beta0") = 0.0)
      .def_property_readonly("g", [](const VafParams& p) { return to_string(p.g); })
      .def_readwrite("alpha", &VafParams::alpha)
      .def_readwrite("alpha0", &VafParams::alpha0)
      .def_readwrite("beta", &VafParams::beta)
      .def_readwrite("beta0", &VafParams::beta0)
      .def_property_readonly("k", &VafParams::k)
      .def("__call__", [](const VafParams& p, double a) { return vaf_eval(p, a); })
      .def("__len__", &VafParams::size);

  m.def("vaf_forward", [](const VafParams& p, double a) {
    auto f = vaf_forward(p, a);
    return py::make_tuple(f.z, f.cache);
  });
  m.def(
      "vaf_backward",
      [](const VafParams& p, double a, double upstream) {
        auto f = vaf_forward(p, a);
        auto b = vaf_backward(p, a, f.cache, upstream);
        return py::make_tuple(b.d_a, grad_dict(b.grad));
      },
      py::arg("params"), py::arg("a"), py::arg("upstream") = 1.0);
  m.def(
      "init_vaf_random",
      [](std::size_t k, const std::string& g, std::uint64_t seed) {
        Rng rng(seed);
        return init_vaf_random(k, kind(g), rng);
      },
      py::arg("k"), py::arg("g"), py::arg("seed") = 0);
  m.def(
      "init_vaf_specific",
      [](std::size_t k, const std::string& g, const std::string& target, std::uint64_t seed,
         double noise) {
        Rng rng(seed);
        return init_vaf_specific(k, kind(g), kind(target), rng, noise);
      },
      py::arg("k"), py::arg("g"), py::arg("target"), py::arg("seed") = 0,
      py::arg("noise") = kSpecificInitNoise);
  m.def(
      "max_grid_error",
      [](const VafParams& p, const std::string& target, double lo, double hi, std::size_t n) {
        return max_grid_error(p, kind(target), lo, hi, n);
      },
      py::arg("params"), py::arg("target"), py::arg("lo") = -5.0, py::arg("hi") = 5.0,
      py::arg("samples") = 1001);
  m.def(
      "parameter_count",
      [](bool shared, const std::vector<std::pair<std::size_t, std::size_t>>& layers) {
        std::vector<VafLayerShape> shapes;
        for (auto [n, k] : layers) shapes.push_back({n, k});
        return parameter_count(shared, shapes);
      },
      py::arg("shared"), py::arg("layers"));

  py::class_<Network>(m, "Network")
      .def_property_readonly("input_dim", &Network::input_dim)
      .def_property_readonly("output_dim", &Network::output_dim)
      .def_property_readonly("parameter_count", &Network::parameter_count)
      .def("flatten_params", &Network::flatten_params)
      .def("set_params", [](Network& n, const std::vector<double>& v) { n.set_params(v); })
      .def("apply_update", [](Network& n, const std::vector<double>& v) { n.apply_update(v); })
      .def("predict", [](const Network& n, const Array& x) { return to_array(predict(n, to_matrix(x))); })
      .def(
          "loss_and_gradient",
          [](const Network& n, const Array& x, const Array& t) {
            auto fwd = forward(n, to_matrix(x));
            const auto target = to_matrix(t);
            const double loss = loss_sse(fwd.output, target);
            auto grads = backward(n, fwd.tape, loss_sse_grad(fwd.output, target));
            return py::make_tuple(loss, grads.flatten());
          },
          py::arg("x"), py::arg("t"))
      .def("describe", &describe_parameters)
      .def("to_json", &model_to_string)
      .def_static("from_json", &model_from_string)
      .def("save", [](const Network& n, const std::filesystem::path& p) { save_model(n, p); })
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); })
      .def("__copy__", [](const Network& n) { return Network(n); })
      .def("__deepcopy__", [](const Network& n, py::dict) { return Network(n); });

  m.def("build", &build_arch, py::arg("arch"), py::arg("input_dim"), py::arg("output_dim"),
        py::arg("g") = "relu", py::arg("shared") = true, py::arg("init") = "random",
        py::arg("fixed") = "relu", py::arg("seed") = 0);

  m.def("loss_sse", [](const Array& y, const Array& t) { return loss_sse(to_matrix(y), to_matrix(t)); });
  m.def("metric_rmse", [](const Array& y, const Array& t) { return metric_rmse(to_matrix(y), to_matrix(t)); });
  m.def("metric_accuracy",
        [](const Array& y, const Array& t) { return metric_accuracy(to_matrix(y), to_matrix(t)); });

  py::class_<PyOptimizer>(m, "Optimizer")
      .def(py::init([](const std::string& name, std::optional<double> lr) {
             return PyOptimizer{optimizer(name, lr)};
           }),
           py::arg("name"), py::arg("lr") = py::none())
      .def_property_readonly("name", [](const PyOptimizer& o) { return optimizer_name(o.state); })
      .def(
          "step",
          [](PyOptimizer& o, std::vector<double> params, const std::vector<double>& grads) {
            step(o.state, params, grads);
            return params;
          },
          py::arg("params"), py::arg("grads"), "Returns the updated parameters.");

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("x", [](const Dataset& d) { return to_array(d.x); })
      .def_property_readonly("t", [](const Dataset& d) { return to_array(d.t); })
      .def_property_readonly("task", [](const Dataset& d) { return to_string(d.task); })
      .def_readonly("classes", &Dataset::classes)
      .def_property_readonly("labels", &Dataset::labels)
      .def("__len__", &Dataset::size)
      .def("normalized", [](const Dataset& d) { return normalize(d); })
      .def("denormalize_targets",
           [](const Dataset& d, const Array& y) { return to_array(denormalize_targets(d, to_matrix(y))); })
      .def(
          "split",
          [](const Dataset& d, const std::vector<double>& fractions, std::uint64_t seed,
             bool stratify) { return split(d, fractions, seed, stratify); },
          py::arg("fractions"), py::arg("seed") = 0, py::arg("stratify") = false);

  m.def(
      "dataset",
      [](const Array& x, const Array& t, const std::string& task) {
        return Dataset{to_matrix(x), to_matrix(t), parse_task(task), {}, {}, {}};
      },
      py::arg("x"), py::arg("t"), py::arg("task") = "regression",
      "Regression dataset from raw arrays.");
  m.def(
      "load_csv",
      [](const std::filesystem::path& path, std::vector<long> target, const std::string& task,
         bool header) {
        CsvSchema schema;
        schema.target_columns = std::move(target);
        schema.task = parse_task(task);
        schema.header = header;
        return load_csv(path, schema);
      },
      py::arg("path"), py::arg("target") = std::vector<long>{-1},
      py::arg("task") = "classification", py::arg("header") = false);
  m.def(
      "synth_regression",
      [](const std::string& kind_name, std::size_t n, double noise, std::uint64_t seed) {
        return synth_regression(parse_synth_regression(kind_name), n, noise, seed);
      },
      py::arg("kind"), py::arg("n"), py::arg("noise") = 0.0, py::arg("seed") = 0);
  m.def(
      "synth_classification",
      [](const std::string& kind_name, std::size_t n, std::uint64_t seed, double separation) {
        return synth_classification(parse_synth_classification(kind_name), n, seed, separation);
      },
      py::arg("kind"), py::arg("n"), py::arg("seed") = 0, py::arg("separation") = 10.0);

  m.def(
      "train",
      [](const Network& net, const Dataset& train_set, const Dataset& val_set,
         std::size_t max_epochs, std::size_t patience, const std::string& opt,
         std::optional<double> lr, std::size_t batch_size, std::uint64_t seed) {
        TrainConfig cfg{max_epochs, patience, optimizer(opt, lr), batch_size, seed};
        TrainResult r = [&] {
          py::gil_scoped_release release;
          return train(net, train_set, val_set, cfg);
        }();
        py::dict trace;
        trace["error_train"] = r.trace.error_train;
        trace["error_val"] = r.trace.error_val;
        trace["best_epoch"] = r.trace.best_epoch;
        trace["best_val_error"] = r.trace.best_val_error;
        trace["stopped_early"] = r.trace.stopped_early;
        return py::make_tuple(std::move(r.best), trace);
      },
      py::arg("net"), py::arg("train_set"), py::arg("val_set"), py::arg("max_epochs") = 300,
      py::arg("patience") = kDefaultPatience, py::arg("optimizer") = "rprop",
      py::arg("lr") = py::none(), py::arg("batch_size") = 0, py::arg("seed") = 0,
      "Returns (best network, trace dict).");

  m.def(
      "vaf_curve",
      [](const Network& net, std::size_t layer, double lo, double hi, std::size_t samples) {
        std::ostringstream out;
        write_vaf_curve(net, layer, lo, hi, samples, out);
        return out.str();
      },
      py::arg("net"), py::arg("layer"), py::arg("lo") = -3.0, py::arg("hi") = 3.0,
      py::arg("samples") = 101, "CSV text with columns a,z (or a,z1..zN).");

  m.def(
      "run_train",
      [](const std::string& config_json) {
        py::gil_scoped_release release;
        return run_command(&cmd_train, config_json);
      },
      py::arg("config_json"), "Runs the train command from a JSON config; returns its log.");
  m.def(
      "run_kfold",
      [](const std::string& config_json) {
        py::gil_scoped_release release;
        return run_command(&cmd_kfold, config_json);
      },
      py::arg("config_json"), "Runs the kfold command from a JSON config; returns its report.");
}
