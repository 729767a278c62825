#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "commands.hpp"
#include "slgp/baselines.hpp"
#include "slgp/design.hpp"
#include "slgp/functionals.hpp"
#include "slgp/mcmc.hpp"
#include "slgp/reference_fields.hpp"

namespace py = pybind11;
using namespace slgp;

namespace {

Dataset make_dataset(const std::vector<double>& x, const std::vector<double>& t) {
  if (x.size() != t.size()) throw std::invalid_argument("x and t must have the same length");
  Dataset d;
  for (std::size_t i = 0; i < x.size(); ++i) d.add(x[i], t[i]);
  return d;
}

ReferenceField make_field(const std::string& kind, const std::string& median) {
  ReferenceField f;
  f.kind = parse_field_kind(kind);
  f.median = parse_median_id(median);
  return f;
}

/// Rows are x locations, columns are t nodes.
Eigen::MatrixXd field_matrix(const std::vector<DensityGrid>& field) {
  if (field.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(field.size()), field.front().values.size());
  for (std::size_t i = 0; i < field.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = field[i].values.transpose();
  return m;
}

std::vector<DensityGrid> field_rows(const Eigen::MatrixXd& m, const GridPtr& grid) {
  std::vector<DensityGrid> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back({grid, m.row(i).transpose()});
  return out;
}

}  // namespace

PYBIND11_MODULE(_slgp, m) {
  m.doc() = "Spatial logistic Gaussian process density fields and quantile-improvement design";
  m.attr("__version__") = cli::version();

  py::class_<Model>(m, "Model")
      .def(py::init([](int q, std::size_t grid_size) { return Model(build_fourier_basis(q), grid_size); }),
           py::arg("q") = 5, py::arg("grid_size") = 101)
      .def_property_readonly("rank", &Model::rank)
      .def_property_readonly("t_grid", [](const Model& self) { return Eigen::VectorXd(self.t_grid()->nodes()); })
      .def("density",
           [](const Model& self, const Eigen::VectorXd& eps, double x) { return slgp_density(self, eps, x).values; },
           py::arg("eps"), py::arg("x"), "density of the slice at x on the t grid");

  py::class_<PosteriorEnsemble>(m, "Ensemble")
      .def_readonly("draws", &PosteriorEnsemble::draws, "p x N matrix of retained coefficient draws")
      .def_readonly("acceptance_rate", &PosteriorEnsemble::acceptance_rate)
      .def_readonly("final_beta", &PosteriorEnsemble::final_beta)
      .def("__len__", &PosteriorEnsemble::size);

  m.def("basis_info",
        [](int q) {
          const BasisSet basis = build_fourier_basis(q);
          py::list rows;
          for (std::size_t j = 0; j < basis.rank(); ++j) {
            const auto& f = basis[j];
            py::dict row;
            row["index"] = j;
            row["kind"] = std::string(to_string(f.kind));
            row["omega_t"] = f.freq.omega_t;
            row["omega_x"] = f.freq.omega_x;
            row["eigenvalue"] = f.eigenvalue();
            row["weight"] = f.weight;
            rows.append(row);
          }
          return rows;
        },
        py::arg("q"));

  m.def("f1", &f1, py::arg("x"));
  m.def("f2", &f2, py::arg("x"));

  m.def("sample",
        [](const std::string& kind, const std::string& median, std::size_t n, std::uint64_t seed) {
          Rng rng(seed);
          const Dataset d = sample_random_design(make_field(kind, median), n, rng);
          std::vector<double> x, t;
          for (const auto& o : d.observations()) {
            x.push_back(o.x);
            t.push_back(o.t);
          }
          return py::make_tuple(x, t);
        },
        py::arg("kind") = "tg", py::arg("median") = "f1", py::arg("n") = 100, py::arg("seed") = 0,
        "(x, t) observations from a reference field on a uniform random design");

  m.def("reference_field",
        [](const std::string& kind, const std::string& median, const std::vector<double>& xs, const Model& model) {
          return field_matrix(reference_field_grid(make_field(kind, median), xs, model.t_grid()));
        },
        py::arg("kind"), py::arg("median"), py::arg("x"), py::arg("model"));

  m.def("estimate",
        [](const Model& model, const std::vector<double>& x, const std::vector<double>& t, std::uint64_t seed,
           std::size_t draws, std::size_t burn_in, std::size_t thinning, double beta, bool adapt,
           const std::string& start) {
          PcnConfig cfg;
          cfg.seed = seed;
          cfg.burn_in = burn_in;
          cfg.thinning = thinning;
          cfg.n_iterations = burn_in + draws * thinning;
          cfg.beta = beta;
          cfg.adapt = adapt;
          if (start != "map" && start != "zero") throw std::invalid_argument("start must be 'map' or 'zero'");
          cfg.start = start == "map" ? ChainStart::map : ChainStart::zero;
          const Dataset data = make_dataset(x, t);
          py::gil_scoped_release release;
          return run_pcn(model, data, cfg);
        },
        py::arg("model"), py::arg("x"), py::arg("t"), py::arg("seed") = 0, py::arg("draws") = 150,
        py::arg("burn_in") = 2000, py::arg("thinning") = 20, py::arg("beta") = 0.1, py::arg("adapt") = true,
        py::arg("start") = "map", "pCN posterior ensemble");

  m.def("posterior_mean_field",
        [](const PosteriorEnsemble& e, const Model& model, const std::vector<double>& xs) {
          return field_matrix(posterior_mean_field(e, model, xs));
        },
        py::arg("ensemble"), py::arg("model"), py::arg("x"));

  m.def("ish_distance",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const std::vector<double>& xs, const Model& model) {
          return ish_distance(field_rows(a, model.t_grid()), field_rows(b, model.t_grid()), xs);
        },
        py::arg("a"), py::arg("b"), py::arg("x"), py::arg("model"),
        "integrated squared Hellinger distance between two fields given as |x| x G matrices");

  m.def("quantile_curve",
        [](const PosteriorEnsemble& e, const Model& model, const std::vector<double>& xs, double alpha,
           double level) {
          return posterior_quantile_curve(e, model, xs, Functional{level}, alpha).values;
        },
        py::arg("ensemble"), py::arg("model"), py::arg("x"), py::arg("alpha") = 0.9, py::arg("level") = 0.5);

  m.def("eqi",
        [](const PosteriorEnsemble& e, const Model& model, const std::vector<double>& candidates,
           std::size_t batch, std::size_t simulations, double alpha, std::uint64_t seed) {
          Rng rng(seed);
          const EqiResult r = select_next(e, model, candidates, batch, simulations, Functional::median(), alpha, rng);
          return py::make_tuple(r.values, r.candidates[r.chosen]);
        },
        py::arg("ensemble"), py::arg("model"), py::arg("candidates"), py::arg("batch") = 20,
        py::arg("simulations") = 150, py::arg("alpha") = 0.9, py::arg("seed") = 0,
        "(EQI per candidate, chosen candidate)");

  m.def("expected_improvement", py::overload_cast<double, double, double>(&expected_improvement),
        py::arg("mean"), py::arg("sd"), py::arg("best"));

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code = 0;
          {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "run the command-line tool in-process; returns (exit code, stdout, stderr)");
}
