#include "gnngp/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace gnngp;

namespace {

using EdgeArray = Eigen::Matrix<Index, Eigen::Dynamic, 2, Eigen::RowMajor>;

SparseAdjacency graph_from_edges(const EdgeArray& edges, Index n_nodes) {
  std::vector<Edge> list;
  list.reserve(static_cast<std::size_t>(edges.rows()));
  for (Index i = 0; i < edges.rows(); ++i) list.push_back(Edge{edges(i, 0), edges(i, 1)});
  return build_adjacency(list, n_nodes, false);
}

Hyperparams make_hp(const py::kwargs& kw) {
  Hyperparams hp;
  for (const auto& [key, value] : kw) {
    const auto name = key.cast<std::string>();
    if (name == "sigma_b") hp.sigma_b = value.cast<double>();
    else if (name == "sigma_w") hp.sigma_w = value.cast<double>();
    else if (name == "alpha") hp.alpha = value.cast<double>();
    else if (name == "lambda_") hp.lambda = value.cast<double>();
    else if (name == "sigma_w1") hp.sigma_w1 = value.cast<double>();
    else if (name == "sigma_w2") hp.sigma_w2 = value.cast<double>();
    else throw InputError("unknown hyperparameter '" + name + "'");
  }
  return hp;
}

BaseKernel make_base(const std::string& kind, double gamma) {
  BaseKernel base;
  if (kind == "inner") base.kind = BaseKernel::Kind::inner;
  else if (kind == "rbf") base.kind = BaseKernel::Kind::rbf;
  else if (kind == "poly") base.kind = BaseKernel::Kind::poly;
  else throw InputError("base must be inner, rbf or poly, got '" + kind + "'");
  base.gamma = gamma;
  return base;
}

KernelProgram program_for(const std::string& arch, int layers, const std::string& base, double gamma,
                          const py::kwargs& kw) {
  const auto a = parse_architecture(arch);
  auto b = make_base(base, gamma);
  if (a == Architecture::ggp && base == "inner") b.kind = BaseKernel::Kind::poly;
  if (a == Architecture::rbf) b.kind = BaseKernel::Kind::rbf;
  return KernelProgram(a, layers, make_hp(kw), b);
}

std::vector<Index> as_indices(const std::vector<long long>& v) { return {v.begin(), v.end()}; }

}  // namespace

PYBIND11_MODULE(_gnngp, m) {
  m.doc() = "Infinite-width graph neural network kernels and Gaussian-process inference.";

  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  static py::exception<PreconditionError> precondition_error(m, "PreconditionError", PyExc_RuntimeError);
  static py::exception<ConvergenceError> convergence_error(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      py::set_error(input_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    } catch (const PreconditionError& e) {
      py::set_error(precondition_error, e.what());
    } catch (const ConvergenceError& e) {
      py::set_error(convergence_error, e.what());
    }
  });

  py::class_<SparseAdjacency>(m, "Graph")
      .def(py::init(&graph_from_edges), py::arg("edges"), py::arg("n_nodes"),
           "Undirected binary adjacency from an (M, 2) integer edge array.")
      .def_property_readonly("n_nodes", &SparseAdjacency::n_nodes)
      .def_property_readonly("n_stored", &SparseAdjacency::n_edges)
      .def("to_dense", &SparseAdjacency::to_dense)
      .def("normalized", [](const SparseAdjacency& g, const std::string& kind) {
            if (kind == "sym") return normalize_sym(g);
            if (kind == "row") return normalize_row(g);
            throw InputError("normalization must be sym or row, got '" + kind + "'");
          }, py::arg("kind") = "sym");

  m.def("correlation_map", &correlation_map, py::arg("rho"));
  m.def("relu_expectation", &relu_expectation, py::arg("k"),
        "E[relu(z) relu(z)^T] for z ~ N(0, K).");

  m.def("kernel",
        [](const std::string& arch, const SparseAdjacency& graph, const Matrix& features, int layers,
           const std::string& base, double gamma, const py::kwargs& kw) {
          const auto program = program_for(arch, layers, base, gamma, kw);
          return run_exact(program, graph_operator(graph, program.architecture()),
                           base_kernel(program.base(), features));
        },
        py::arg("arch"), py::arg("graph"), py::arg("features"), py::arg("layers") = 2,
        py::arg("base") = "inner", py::arg("gamma") = 1.0,
        "Exact N x N kernel. Keyword hyperparameters: sigma_b, sigma_w, alpha, lambda_, sigma_w1, sigma_w2.");

  m.def("kernel_lowrank",
        [](const std::string& arch, const SparseAdjacency& graph, const Matrix& features,
           const std::vector<long long>& landmarks, int layers, const std::string& base, double gamma,
           const py::kwargs& kw) {
          const auto program = program_for(arch, layers, base, gamma, kw);
          const LandmarkSet set(as_indices(landmarks), features.rows());
          const auto q0 = input_factor(program.base(), features, set);
          return lowrank_variant(program, graph_operator(graph, program.architecture()), q0, set).q();
        },
        py::arg("arch"), py::arg("graph"), py::arg("features"), py::arg("landmarks"), py::arg("layers") = 2,
        py::arg("base") = "inner", py::arg("gamma") = 1.0, "Factor Q with K ~= Q Q^T.");

  m.def("posterior_mean",
        [](const Matrix& k, const std::vector<long long>& train, const std::vector<long long>& predict,
           const Matrix& y, double eps) {
          return posterior_mean_exact(k, as_indices(train), as_indices(predict), y, eps).mean;
        },
        py::arg("k"), py::arg("train"), py::arg("predict"), py::arg("y"), py::arg("eps"));
  m.def("posterior_variance",
        [](const Matrix& k, const std::vector<long long>& train, const std::vector<long long>& predict,
           double eps) { return posterior_variance_exact(k, as_indices(train), as_indices(predict), eps); },
        py::arg("k"), py::arg("train"), py::arg("predict"), py::arg("eps"));
  m.def("posterior_mean_lowrank",
        [](const Matrix& q, const std::vector<long long>& train, const std::vector<long long>& predict,
           const Matrix& y, double eps) {
          return posterior_mean_lowrank(LowRankFactor(q), as_indices(train), as_indices(predict), y, eps).mean;
        },
        py::arg("q"), py::arg("train"), py::arg("predict"), py::arg("y"), py::arg("eps"));
  m.def("posterior_variance_lowrank",
        [](const Matrix& q, const std::vector<long long>& train, const std::vector<long long>& predict,
           double eps) {
          return posterior_variance_lowrank(LowRankFactor(q), as_indices(train), as_indices(predict), eps);
        },
        py::arg("q"), py::arg("train"), py::arg("predict"), py::arg("eps"));

  m.def("mc_covariance",
        [](const std::string& arch, const SparseAdjacency& graph, const Matrix& features, int layers, int width,
           int samples, std::uint64_t seed, const py::kwargs& kw) {
          McConfig cfg;
          cfg.architecture = parse_architecture(arch);
          cfg.layers = layers;
          cfg.width = width;
          cfg.n_samples = samples;
          cfg.seed = seed;
          cfg.hp = make_hp(kw);
          const auto a = graph_operator(graph, cfg.architecture);
          return py::make_tuple(sample_covariance(cfg, *a, features), analytic_covariance(cfg, a, features));
        },
        py::arg("arch"), py::arg("graph"), py::arg("features"), py::arg("layers") = 2, py::arg("width") = 1024,
        py::arg("samples") = 100, py::arg("seed") = 0,
        "(empirical, analytic) output covariances of random finite networks.");

  m.def("load_dataset",
        [](const std::filesystem::path& dir) {
          const auto d = load_dataset(dir);
          py::dict out;
          out["name"] = d.name;
          out["graph"] = d.graph;
          out["features"] = d.features;
          if (d.targets.task == Task::classification) out["labels"] = d.targets.labels;
          else out["values"] = d.targets.values;
          out["train"] = d.splits.train;
          out["val"] = d.splits.val;
          out["test"] = d.splits.test;
          return out;
        },
        py::arg("path"));

  m.def("infer",
        [](const std::filesystem::path& dir, const std::string& arch, int layers, bool lowrank,
           std::optional<Index> landmarks, std::optional<double> nugget, std::uint64_t seed,
           const py::kwargs& kw) {
          InferConfig cfg;
          cfg.arch = parse_architecture(arch);
          cfg.layers = layers;
          cfg.lowrank = lowrank;
          cfg.landmarks = landmarks;
          cfg.nugget = nugget;
          cfg.seed = seed;
          cfg.hp = make_hp(kw);
          const auto res = run_infer(load_dataset(dir), cfg);
          std::ostringstream text;
          res.report.write(text);
          py::dict out;
          out["train"] = res.train_score;
          out["val"] = res.val_score;
          out["test"] = res.test_score;
          out["nugget"] = res.nugget;
          out["test_mean"] = res.test_mean;
          out["test_variance"] = res.test_variance;
          out["report"] = text.str();
          return out;
        },
        py::arg("path"), py::arg("arch") = "gcn", py::arg("layers") = 2, py::arg("lowrank") = false,
        py::arg("landmarks") = py::none(), py::arg("nugget") = py::none(), py::arg("seed") = 0,
        "Run the infer pipeline on a dataset directory and return scores and the report text.");
}
