#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sizeunfold/harness.hpp"

namespace py = pybind11;
using namespace sizeunfold;

namespace {

SolverConfig make_config(const std::string& solver, double eps_stop, int stable_iters,
                         int max_iters) {
  SolverConfig cfg;
  if (solver == "em")
    cfg.method = SolverConfig::Method::EM;
  else if (solver == "icm")
    cfg.method = SolverConfig::Method::ICM;
  else if (solver == "hybrid")
    cfg.method = SolverConfig::Method::Hybrid;
  else
    throw std::invalid_argument("solver must be em, icm, or hybrid");
  cfg.eps_stop = eps_stop;
  cfg.stable_iters = stable_iters;
  cfg.max_iters = max_iters;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "size distributions of convex particles from planar section areas";

  py::class_<Polyhedron>(m, "Polyhedron")
      .def(py::init([](const std::vector<std::array<double, 3>>& vertices,
                       std::vector<std::vector<int>> faces) {
             std::vector<Vec3> v;
             v.reserve(vertices.size());
             for (const auto& a : vertices) v.push_back({a[0], a[1], a[2]});
             return Polyhedron(std::move(v), std::move(faces));
           }),
           py::arg("vertices"), py::arg("faces"))
      .def_property_readonly("n_vertices",
                             [](const Polyhedron& K) { return K.vertices().size(); })
      .def_property_readonly("n_faces",
                             [](const Polyhedron& K) { return K.faces().size(); })
      .def("__repr__", [](const Polyhedron& K) {
        return "Polyhedron(" + std::to_string(K.vertices().size()) + " vertices, " +
               std::to_string(K.faces().size()) + " faces)";
      });
  m.def("make_cube", &make_cube);
  m.def("make_tetrahedron", &make_tetrahedron);
  m.def("make_dodecahedron", &make_dodecahedron);
  m.def("make_ball_mesh", &make_ball_mesh, py::arg("frequency"), py::arg("r") = 1.0);
  m.def("load_off", &load_off, py::arg("path"));
  m.def("volume", &volume, py::arg("K"));
  m.def("content_hash", &content_hash, py::arg("K"));

  py::class_<AnalyticBall>(m, "AnalyticBall").def(py::init<>());
  m.def("analytic_ball_cdf_sqrt", &analytic_ball_cdf_sqrt, py::arg("s"));
  m.def("analytic_ball_density_sqrt", &analytic_ball_density_sqrt, py::arg("s"));

  py::class_<ReferenceDistribution>(m, "ReferenceDistribution")
      .def(py::init<std::vector<double>, std::uint64_t>(), py::arg("sqrt_samples"),
           py::arg("shape_hash") = 0)
      .def_property_readonly("sqrt_samples", &ReferenceDistribution::sqrt_samples)
      .def_property_readonly("s_max_hat", &ReferenceDistribution::s_max_hat)
      .def_property_readonly("shape_hash", &ReferenceDistribution::shape_hash)
      .def_property_readonly("fitted", &ReferenceDistribution::fitted)
      .def_property_readonly("grid_size", &ReferenceDistribution::grid_size)
      .def_property_readonly("bandwidth", &ReferenceDistribution::bandwidth);
  m.def(
      "sample_section_sqrt_areas",
      [](const Polyhedron& K, std::int64_t n, std::uint64_t seed, int workers) {
        Rng rng(seed);
        return sample_section_sqrt_areas(K, n, rng, workers);
      },
      py::arg("K"), py::arg("n"), py::arg("seed"), py::arg("workers") = 0,
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "sample_reference",
      [](const Polyhedron& K, std::int64_t n, std::uint64_t seed, int workers) {
        Rng rng(seed);
        return sample_reference(K, n, rng, workers);
      },
      py::arg("K"), py::arg("n"), py::arg("seed"), py::arg("workers") = 0,
      py::call_guard<py::gil_scoped_release>());
  m.def("fit_density", &fit_density, py::arg("ref"), py::arg("grid_size") = 4096,
        py::arg("bandwidth") = py::none());
  m.def("eval_density", &eval_density, py::arg("ref"), py::arg("s"));
  m.def("eval_cdf", &eval_cdf, py::arg("ref"), py::arg("s"));
  m.def("save_reference", &save_reference, py::arg("ref"), py::arg("path"));
  m.def("load_reference", &load_reference, py::arg("path"));

  py::class_<StepCDF>(m, "StepCDF")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("atoms"),
           py::arg("probs"))
      .def_property_readonly("atoms", &StepCDF::atoms)
      .def_property_readonly("probs", &StepCDF::probs)
      .def("eval", &StepCDF::eval, py::arg("x"))
      .def("quantile", &StepCDF::quantile, py::arg("q"))
      .def("mean", &StepCDF::mean)
      .def("__repr__", [](const StepCDF& c) {
        return "StepCDF(" + std::to_string(c.atoms().size()) + " atoms)";
      });
  m.def("length_bias", &length_bias, py::arg("h"));
  m.def("debias", &debias, py::arg("hb"));
  m.def("volume_cdf", &volume_cdf, py::arg("h"));

  py::class_<ParametricSize>(m, "ParametricSize")
      .def_static("exponential", &ParametricSize::exponential, py::arg("rate"))
      .def_static("lognormal", &ParametricSize::lognormal, py::arg("log_mean"),
                  py::arg("log_sd"))
      .def("cdf", &ParametricSize::cdf, py::arg("x"))
      .def("biased_cdf", &ParametricSize::biased_cdf, py::arg("x"))
      .def("mean", &ParametricSize::mean)
      .def("biased_mean", &ParametricSize::biased_mean);

  m.def(
      "forward_sample",
      [](const ReferenceDistribution& ref, const ParametricSize& sizes, std::int64_t n,
         std::uint64_t seed) {
        Rng rng(seed);
        return forward_sample(ref, sizes, n, rng);
      },
      py::arg("ref"), py::arg("sizes"), py::arg("n"), py::arg("seed"));
  m.def(
      "forward_sample",
      [](AnalyticBall, const ParametricSize& sizes, std::int64_t n, std::uint64_t seed) {
        Rng rng(seed);
        return forward_sample(AnalyticBall{}, sizes, n, rng);
      },
      py::arg("ball"), py::arg("sizes"), py::arg("n"), py::arg("seed"));
  m.def(
      "forward_sample",
      [](const ReferenceDistribution& ref, const StepCDF& sizes, std::int64_t n,
         std::uint64_t seed) {
        Rng rng(seed);
        return forward_sample(ref, sizes, n, rng);
      },
      py::arg("ref"), py::arg("sizes"), py::arg("n"), py::arg("seed"));
  m.def(
      "forward_sample",
      [](AnalyticBall, const StepCDF& sizes, std::int64_t n, std::uint64_t seed) {
        Rng rng(seed);
        return forward_sample(AnalyticBall{}, sizes, n, rng);
      },
      py::arg("ball"), py::arg("sizes"), py::arg("n"), py::arg("seed"));

  py::class_<FitState>(m, "FitState")
      .def_readonly("beta", &FitState::beta)
      .def_readonly("loglik", &FitState::loglik)
      .def_readonly("iterations", &FitState::iterations)
      .def_readonly("converged", &FitState::converged)
      .def_readonly("ever_stalled", &FitState::ever_stalled)
      .def_readonly("kkt_residual", &FitState::kkt_residual);

  py::class_<TruncationSelection>(m, "TruncationSelection")
      .def_readonly("t_hat", &TruncationSelection::t_hat)
      .def_readonly("candidate_ts", &TruncationSelection::candidate_ts)
      .def_readonly("l1_distances", &TruncationSelection::l1_distances);

  py::class_<EstimateResult>(m, "EstimateResult")
      .def_readonly("fit_state", &EstimateResult::fit_state)
      .def_readonly("biased", &EstimateResult::biased)
      .def_readonly("selection", &EstimateResult::selection)
      .def_readonly("biased_truncated", &EstimateResult::biased_truncated)
      .def_readonly("size_cdf", &EstimateResult::size_cdf);

  m.def(
      "estimate",
      [](const ReferenceDistribution& ref, const std::vector<double>& obs,
         const std::string& solver, double eps_stop, int stable_iters, int max_iters) {
        return estimate_H(ref, obs, make_config(solver, eps_stop, stable_iters, max_iters));
      },
      py::arg("ref"), py::arg("obs"), py::arg("solver") = "hybrid",
      py::arg("eps_stop") = 1e-4, py::arg("stable_iters") = 10,
      py::arg("max_iters") = 5000, py::call_guard<py::gil_scoped_release>());
  m.def(
      "estimate",
      [](AnalyticBall, const std::vector<double>& obs, const std::string& solver,
         double eps_stop, int stable_iters, int max_iters) {
        return estimate_H(AnalyticBall{}, obs,
                          make_config(solver, eps_stop, stable_iters, max_iters));
      },
      py::arg("ball"), py::arg("obs"), py::arg("solver") = "hybrid",
      py::arg("eps_stop") = 1e-4, py::arg("stable_iters") = 10,
      py::arg("max_iters") = 5000, py::call_guard<py::gil_scoped_release>());
}
