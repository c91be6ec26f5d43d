#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pspo/criterion.hpp"
#include "pspo/error.hpp"
#include "pspo/harness.hpp"

namespace py = pybind11;
using namespace pspo;

namespace {

Placement to_placement(const std::vector<Index>& idx) { return Placement{idx}; }

ExperimentConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

py::list rows_to_list(const RunReport& r) {
  py::list out;
  for (const auto& row : r.rows) {
    py::dict d;
    d["case"] = row.case_name;
    d["method"] = row.method;
    d["k"] = row.k;
    d["sigma"] = row.sigma;
    d["seed"] = row.seed;
    d["reconstructor"] = row.reconstructor;
    d["max_ae"] = row.metrics.max_ae;
    d["mse"] = row.metrics.mse;
    d["log10_kappa"] = row.log10_kappa;
    d["wall_ms"] = row.wall_ms;
    d["placement_path"] = row.placement_path;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_pspo, m) {
  m.doc() = "physics-driven sensor placement";

  // leaked on purpose, outlives interpreter teardown
  static auto* pspo_error = new py::exception<Error>(m, "PspoError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.code())) + ": " + e.what();
      PyErr_SetString(pspo_error->ptr(), msg.c_str());
    }
  });

  py::class_<CaseModel>(m, "Case")
      .def_property_readonly("name", [](const CaseModel& c) { return c.spec.name; })
      .def_property_readonly("n", [](const CaseModel& c) { return c.cloud.size(); })
      .def_property_readonly("parameters", [](const CaseModel& c) { return c.op.l(); })
      .def_property_readonly("points", [](const CaseModel& c) {
        Matrix pts(c.cloud.size(), c.cloud.dim);
        for (Index i = 0; i < c.cloud.size(); ++i) {
          for (int d = 0; d < c.cloud.dim; ++d) pts(i, d) = c.cloud.points[i](d);
        }
        return pts;
      })
      .def_property_readonly("W1", [](const CaseModel& c) { return Matrix(c.op.W1); })
      .def_property_readonly("source_basis", [](const CaseModel& c) { return c.op.source_basis; })
      .def("rhs", [](const CaseModel& c, const Vector& lam) { return c.op.rhs(lam); })
      .def("forward", [](const CaseModel& c, const Vector& lam) { return forward_solve(c.op, lam); },
           py::arg("lam"))
      .def("ground_truth", [](const CaseModel& c, const Vector& lam) { return ground_truth(c, lam); },
           py::arg("lam"));

  m.def("build_case",
        [](const std::string& name, Index n) {
          CaseSpec s = case_by_name(name);
          if (n > 0) s.n = n;
          return build_case(s);
        },
        py::arg("name") = "heat1d", py::arg("n") = 0);
  m.def("heat1d_exact", &heat1d_exact, py::arg("x"), py::arg("lam"));

  m.def("condition_number",
        [](const Matrix& W) {
          const CriterionValue v = condition_number(W);
          return v.kappa;
        });
  m.def("log10_kappa",
        [](const CaseModel& c, const std::vector<Index>& idx, double gamma) {
          return CriterionContext(c.op, gamma).evaluate(to_placement(idx)).log10_kappa;
        },
        py::arg("case"), py::arg("indices"), py::arg("gamma") = 1.0);

  m.def("uniform_placement",
        [](const CaseModel& c, Index k) { return uniform_placement(c.cloud, k).indices; },
        py::arg("case"), py::arg("k"));
  m.def("random_placement",
        [](Index n, Index k, std::uint64_t seed) { return random_placement(n, k, seed).indices; },
        py::arg("n"), py::arg("k"), py::arg("seed") = 0);
  m.def("optimize",
        [](const CaseModel& c, Index k, std::uint64_t seed, Index generations,
           Index population, double gamma) {
          const CriterionContext ctx(c.op, gamma);
          GaConfig cfg;
          cfg.seed = seed;
          cfg.generations = generations;
          cfg.population_size = population;
          GaResult r;
          {
            py::gil_scoped_release release;
            r = ga_optimize(ctx, k, cfg);
          }
          return py::make_tuple(r.best.indices, r.best_fitness, r.history);
        },
        py::arg("case"), py::arg("k"), py::arg("seed") = 0,
        py::arg("generations") = 2000, py::arg("population") = 10,
        py::arg("gamma") = 1.0);

  m.def("physics_reconstruct",
        [](const CaseModel& c, const std::vector<Index>& idx, const Vector& s, double gamma) {
          const PhysicsEstimate e = physics_reconstruct(c.op, to_placement(idx), s, gamma);
          return py::make_tuple(e.field, e.lambda);
        },
        py::arg("case"), py::arg("indices"), py::arg("measurements"),
        py::arg("gamma") = 1.0);
  m.def("gappy_reconstruct",
        [](const Matrix& snapshots, Index r, const std::vector<Index>& idx, const Matrix& s) {
          const PODBasis b = pod_fit({snapshots, "py"}, r);
          return GappyPod(b, to_placement(idx)).reconstruct_many(s);
        },
        py::arg("snapshots"), py::arg("r"), py::arg("indices"),
        py::arg("measurements"));

  m.def("run_experiment",
        [](const std::string& config_text, const std::string& out) {
          ExperimentConfig cfg = config_from_text(config_text);
          if (!out.empty()) cfg.output_dir = out;
          RunReport r;
          {
            py::gil_scoped_release release;
            r = run_experiment(cfg);
          }
          return py::make_tuple(r.config_hash, rows_to_list(r));
        },
        py::arg("config_text"), py::arg("out") = "");
  m.def("config_hash",
        [](const std::string& text) { return config_hash(config_from_text(text)); });
}
