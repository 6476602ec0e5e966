#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "fimlab/experiments.hpp"
#include "fimlab/fisher.hpp"
#include "fimlab/mcfim.hpp"
#include "fimlab/models/exp_family.hpp"
#include "fimlab/models/gaussian_mean.hpp"
#include "fimlab/models/mixture.hpp"
#include "fimlab/models/signal_plus_noise.hpp"
#include "fimlab/models/state_space.hpp"
#include "fimlab/solve.hpp"
#include "fimlab/spsa.hpp"

namespace py = pybind11;
using namespace fimlab;

namespace {

// Python callables see plain vectors; SymMat stays an implementation detail.
Matrix to_mat(const SymMat& s) { return s.mat(); }

// Tables cross into Python as plain dicts: numbers stay floats, labels stay
// strings, metadata keeps its emission order.
py::dict table_to_dict(const ResultTable& t) {
  py::dict d;
  d["name"] = t.name;
  d["title"] = t.title;
  d["columns"] = t.columns;
  py::list rows;
  for (const auto& row : t.rows) {
    py::list cells;
    for (const Cell& cell : row) {
      if (cell.numeric) {
        cells.append(cell.num);
      } else {
        cells.append(cell.text);
      }
    }
    rows.append(std::move(cells));
  }
  d["rows"] = std::move(rows);
  py::dict meta;
  for (const auto& [k, v] : t.metadata) meta[py::str(k)] = v;
  d["metadata"] = std::move(meta);
  return d;
}

}  // namespace

PYBIND11_MODULE(_fimlab, m) {
  m.doc() = "Fisher information estimation lab: models, solvers, SPSA, and "
            "Monte Carlo information estimators.";

  py::register_exception<Error>(m, "FimlabError");

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream") = 0)
      .def("uniform", &RngStream::uniform)
      .def("normal", &RngStream::normal)
      .def("poisson", &RngStream::poisson, py::arg("lam"))
      .def("substream", [](const RngStream& r, const std::string& label) {
        return r.substream(label);
      }, py::arg("label"));

  py::class_<DataSet>(m, "DataSet")
      .def(py::init<Matrix>(), py::arg("observations"))
      .def_property_readonly("n", &DataSet::n)
      .def_property_readonly("q", &DataSet::q)
      .def("matrix", &DataSet::matrix);

  py::class_<Model, std::shared_ptr<Model>>(m, "Model")
      .def_property_readonly("name", &Model::name)
      .def_property_readonly("param_dim", &Model::param_dim)
      .def_property_readonly("obs_dim", &Model::obs_dim)
      .def("sample", [](const Model& mod, const Vector& theta, int n, RngStream& rng) {
        return mod.sample(theta, n, rng);
      }, py::arg("theta"), py::arg("n"), py::arg("rng"))
      .def("neg_log_lik", &Model::neg_log_lik, py::arg("theta"), py::arg("data"))
      .def("grad", &Model::grad, py::arg("theta"), py::arg("data"))
      .def("hessian", [](const Model& mod, const Vector& theta, const DataSet& data) {
        return to_mat(mod.hessian(theta, data));
      }, py::arg("theta"), py::arg("data"))
      .def("has_analytic_fim", &Model::has_analytic_fim)
      .def("expected_fim", [](const Model& mod, const Vector& theta, int n) {
        return to_mat(mod.expected_fim(theta, n));
      }, py::arg("theta"), py::arg("n"))
      .def("default_init", &Model::default_init, py::arg("data"));

  m.def("mixture_location", [](double sigma1, double sigma2) -> std::shared_ptr<Model> {
    return std::make_shared<MixtureModel>(MixtureModel::location(sigma1, sigma2));
  }, py::arg("sigma1") = 1.0, py::arg("sigma2") = 1.0);
  m.def("mixture_location_scale", []() -> std::shared_ptr<Model> {
    return std::make_shared<MixtureModel>(MixtureModel::location_scale());
  });
  m.def("signal_plus_noise", [](const Matrix& utu) -> std::shared_ptr<Model> {
    return std::make_shared<SignalPlusNoiseModel>(utu);
  }, py::arg("utu"));
  m.def("signal_plus_noise_paper_utu", []() { return SignalPlusNoiseModel::paper_utu(); });
  m.def("state_space_paper", []() -> std::shared_ptr<Model> {
    return std::make_shared<StateSpaceModel>(StateSpaceModel::paper_model());
  });
  m.def("exp_family_poisson", []() -> std::shared_ptr<Model> {
    return std::make_shared<ExpFamilyModel>(ExpFamilyModel::poisson());
  });
  m.def("exp_family_exponential", []() -> std::shared_ptr<Model> {
    return std::make_shared<ExpFamilyModel>(ExpFamilyModel::exponential_rate());
  });
  m.def("exp_family_gaussian_mean", [](double sigma) -> std::shared_ptr<Model> {
    return std::make_shared<ExpFamilyModel>(ExpFamilyModel::gaussian_mean(sigma));
  }, py::arg("sigma") = 1.0);
  m.def("gaussian_mean", [](const Matrix& cov) -> std::shared_ptr<Model> {
    return std::make_shared<GaussianMeanModel>(SymMat(cov));
  }, py::arg("cov"));

  py::class_<MleResult>(m, "MleResult")
      .def_readonly("theta", &MleResult::theta)
      .def_readonly("nll", &MleResult::nll)
      .def_readonly("converged", &MleResult::converged)
      .def_readonly("iterations", &MleResult::iterations)
      .def_readonly("grad_norm", &MleResult::grad_norm);

  m.def("fit_mle", [](const Model& model, const DataSet& data, RngStream rng) {
    return fit_mle(model, data, rng);
  }, py::arg("model"), py::arg("data"), py::arg("rng"));

  m.def("observed_fim", [](const Model& model, const DataSet& data, const Vector& theta) {
    return to_mat(observed_fim(model, data, theta));
  }, py::arg("model"), py::arg("data"), py::arg("theta"));

  m.def("expected_fim_scaled",
        [](const Model& model, const Vector& theta, int n, int mc_datasets,
           std::optional<RngStream> rng, int threads) {
          const FimScaled f = expected_fim_scaled(model, theta, n, mc_datasets, rng, threads);
          return py::make_tuple(to_mat(f.value), f.analytic, f.datasets);
        },
        py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("mc_datasets") = 0,
        py::arg("rng") = std::nullopt, py::arg("threads") = 1);

  py::class_<McCovResult>(m, "McCovResult")
      .def_property_readonly("n_cov", [](const McCovResult& r) { return to_mat(r.n_cov); })
      .def_readonly("mean_theta", &McCovResult::mean_theta)
      .def_readonly("reps", &McCovResult::reps)
      .def_readonly("failures", &McCovResult::failures);

  m.def("mc_cov_mle", [](const Model& model, const Vector& theta_star, int n, int reps,
                         RngStream rng, int threads) {
    return mc_cov_mle(model, theta_star, n, reps, rng, threads);
  }, py::arg("model"), py::arg("theta_star"), py::arg("n"), py::arg("reps"),
     py::arg("rng"), py::arg("threads") = 1);

  m.def("typical_outcome", [](const std::vector<Matrix>& candidates, const Matrix& target) {
    std::vector<SymMat> cs;
    cs.reserve(candidates.size());
    for (const Matrix& c : candidates) cs.emplace_back(c);
    return to_mat(typical_outcome(cs, SymMat(target)));
  }, py::arg("candidates"), py::arg("target"));

  py::class_<GainSchedule>(m, "GainSchedule")
      .def(py::init([](double a, double c) { return GainSchedule{a, c}; }),
           py::arg("a"), py::arg("c"))
      .def_readonly("a", &GainSchedule::a)
      .def_readonly("c", &GainSchedule::c)
      .def("ak", &GainSchedule::ak, py::arg("k"))
      .def("ck", &GainSchedule::ck, py::arg("k"));

  py::class_<PerturbationDist>(m, "PerturbationDist")
      .def_static("bernoulli_pm1", &PerturbationDist::bernoulli_pm1)
      .def_static("segmented_uniform", &PerturbationDist::segmented_uniform)
      .def_static("segmented_uniform_lo", &PerturbationDist::segmented_uniform_lo)
      .def_static("segmented_uniform_hi", &PerturbationDist::segmented_uniform_hi)
      .def("draw", &PerturbationDist::draw, py::arg("rng"))
      .def_property_readonly("variance", &PerturbationDist::variance)
      .def_property_readonly("inv_sq_moment", &PerturbationDist::inv_sq_moment);

  m.def("sample_perturbation", &sample_perturbation, py::arg("dist"), py::arg("p"), py::arg("rng"));
  m.def("sp_gradient", &sp_gradient, py::arg("loss"), py::arg("theta"), py::arg("ck"),
        py::arg("delta"));
  m.def("spsa_run", [](const NoisyLoss& y, const Vector& theta0, const GainSchedule& gains,
                       const PerturbationDist& dist, int iters, RngStream rng) {
    return spsa_run(y, theta0, gains, dist, iters, rng);
  }, py::arg("loss"), py::arg("theta0"), py::arg("gains"), py::arg("dist"),
     py::arg("iters"), py::arg("rng"));

  m.def("theorem_a1_lhs", &theorem_a1_lhs, py::arg("grad_at_start"), py::arg("theta0"),
        py::arg("theta_star"), py::arg("sigma2"), py::arg("a0_su"), py::arg("a0_b"),
        py::arg("c0_su"), py::arg("c0_b"));
  m.def("corollary_a1_bound", &corollary_a1_bound, py::arg("third_deriv_bound"),
        py::arg("theta0"), py::arg("theta_star"), py::arg("grad_at_start"),
        py::arg("a0_su"), py::arg("a0_b"), py::arg("c0_su"), py::arg("c0_b"));

  py::class_<PairedTTest>(m, "PairedTTest")
      .def_readonly("n", &PairedTTest::n)
      .def_readonly("mean_diff", &PairedTTest::mean_diff)
      .def_readonly("se_diff", &PairedTTest::se_diff)
      .def_readonly("t_stat", &PairedTTest::t_stat)
      .def_readonly("p_greater", &PairedTTest::p_greater)
      .def_readonly("p_less", &PairedTTest::p_less)
      .def_readonly("degenerate", &PairedTTest::degenerate);

  py::class_<SpsaComparison>(m, "SpsaComparison")
      .def_readonly("mse_bernoulli", &SpsaComparison::mse_bernoulli)
      .def_readonly("mse_su", &SpsaComparison::mse_su)
      .def_readonly("mean_diff", &SpsaComparison::mean_diff)
      .def_readonly("se_diff", &SpsaComparison::se_diff)
      .def_readonly("ttest", &SpsaComparison::ttest)
      .def_readonly("reps", &SpsaComparison::reps)
      .def_readonly("iters", &SpsaComparison::iters);

  m.def("mse_compare", [](const std::function<double(const Vector&)>& loss,
                          const Vector& theta_star, const Vector& theta0, double noise_var,
                          const GainSchedule& gains_su, const GainSchedule& gains_b,
                          int iters, int reps, RngStream rng, int threads) {
    return mse_compare(loss, theta_star, theta0, noise_var, gains_su, gains_b, iters, reps,
                       rng, threads);
  }, py::arg("loss"), py::arg("theta_star"), py::arg("theta0"), py::arg("noise_var"),
     py::arg("gains_su"), py::arg("gains_b"), py::arg("iters"), py::arg("reps"),
     py::arg("rng"), py::arg("threads") = 1);

  py::enum_<McFimMode>(m, "McFimMode")
      .value("gradient", McFimMode::gradient)
      .value("likelihood_only", McFimMode::likelihood_only);

  py::class_<McFimOptions>(m, "McFimOptions")
      .def(py::init<>())
      .def_readwrite("datasets", &McFimOptions::datasets)
      .def_readwrite("inner_reps", &McFimOptions::inner_reps)
      .def_readwrite("c", &McFimOptions::c)
      .def_readwrite("mode", &McFimOptions::mode)
      .def_readwrite("per_observation", &McFimOptions::per_observation);

  py::class_<FimEstimate>(m, "FimEstimate")
      .def_property_readonly("value", [](const FimEstimate& f) { return to_mat(f.value); })
      .def_readonly("datasets", &FimEstimate::datasets)
      .def_readonly("inner_reps", &FimEstimate::inner_reps)
      .def_readonly("feedback", &FimEstimate::feedback)
      .def_readonly("per_observation", &FimEstimate::per_observation);

  m.def("fim_basic", [](const Model& model, const Vector& theta, int n,
                        const McFimOptions& opts, RngStream rng) {
    return fim_basic(model, theta, n, opts, rng);
  }, py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("opts"), py::arg("rng"));
  m.def("fim_feedback", [](const Model& model, const Vector& theta, int n,
                           const McFimOptions& opts, RngStream rng) {
    return fim_feedback(model, theta, n, opts, rng);
  }, py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("opts"), py::arg("rng"));
  m.def("fim_indep", [](const Model& model, const Vector& theta, int n,
                        const McFimOptions& opts, bool feedback, RngStream rng) {
    return fim_indep(model, theta, n, opts, feedback, rng);
  }, py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("opts"),
     py::arg("feedback"), py::arg("rng"));

  m.def("psi", &psi, py::arg("h"), py::arg("delta"));
  m.def("sp_hessian_estimate", &sp_hessian_estimate, py::arg("grad_fn"), py::arg("theta"),
        py::arg("c"), py::arg("delta"));
  m.def("relative_error", &relative_error, py::arg("estimate"), py::arg("reference"));

  m.def("list_experiments", []() {
    py::list out;
    for (const ExperimentInfo& info : list_experiments()) {
      py::dict d;
      d["name"] = info.name;
      d["description"] = info.description;
      py::list knobs;
      for (const OverrideSpec& spec : info.overrides) {
        py::dict k;
        k["key"] = spec.key;
        k["integral"] = spec.integral;
        k["min"] = spec.min_value;
        k["max"] = spec.max_value;
        k["what"] = spec.what;
        knobs.append(std::move(k));
      }
      d["overrides"] = std::move(knobs);
      out.append(std::move(d));
    }
    return out;
  });

  m.def("run_experiment", [](const std::string& config_json) {
    const ExperimentConfig cfg = ExperimentConfig::from_json_text(config_json);
    py::list out;
    for (const ResultTable& t : run_experiment(cfg)) out.append(table_to_dict(t));
    return out;
  }, py::arg("config_json"),
     "Run a study from a JSON config string; returns its tables as dicts.");

  m.def("render_experiment", [](const std::string& config_json, const std::string& format) {
    const ExperimentConfig cfg = ExperimentConfig::from_json_text(config_json);
    return render_all(run_experiment(cfg), parse_format(format));
  }, py::arg("config_json"), py::arg("format") = "csv",
     "Run a study and return the rendered output (csv, md, or json).");
}
