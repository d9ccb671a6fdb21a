#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bsml/error.hpp"
#include "bsml/gibbs.hpp"
#include "bsml/postprocess.hpp"
#include "bsml/sim.hpp"

namespace py = pybind11;
using namespace bsml;

namespace {

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["mse"] = m.mse;
  d["mspe"] = m.mspe;
  d["rank_hat"] = m.rank_hat;
  d["sensitivity"] = m.sensitivity ? py::cast(*m.sensitivity) : py::none();
  d["specificity"] = m.specificity ? py::cast(*m.specificity) : py::none();
  return d;
}

py::dict summary_dict(const MetricSummary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["se"] = s.se;
  d["count"] = s.count;
  return d;
}

GibbsConfig make_config(std::size_t iterations, std::size_t burn_in, std::size_t thin, double alpha,
                        Index rank_bound, std::uint64_t seed, const std::string& noise_model, bool store_draws,
                        double credible_level) {
  GibbsConfig c;
  c.iterations = iterations;
  c.burn_in = burn_in;
  c.thin = thin;
  c.alpha = alpha;
  c.rank_bound = rank_bound;
  c.seed = seed;
  c.noise_model = noise_model_from_string(noise_model);
  c.store_draws = store_draws;
  c.credible_level = credible_level;
  return c;
}

SimulationSpec make_spec(Index n, Index p, Index q, Index r0, Index s, const std::string& design,
                         const std::string& noise, std::uint64_t seed) {
  SimulationSpec spec;
  spec.n = n;
  spec.p = p;
  spec.q = q;
  spec.r0 = r0;
  spec.s = s;
  spec.design = design_kind_from_string(design);
  spec.noise = noise_design_from_string(noise);
  spec.seed = seed;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian sparse reduced-rank multi-response regression";

  static py::exception<NumericalError> numerical(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const NumericalError& e) {
      py::set_error(numerical, e.what());
    }
  });

  m.def(
      "fit",
      [](const MatrixXd& x, const MatrixXd& y, std::size_t iterations, std::size_t burn_in, std::size_t thin,
         double alpha, Index rank_bound, std::uint64_t seed, const std::string& noise_model, bool store_draws,
         double credible_level, bool center) {
        Dataset data;
        data.X = x;
        data.Y = y;
        VectorXd offsets = VectorXd::Zero(y.cols());
        VectorXd x_offsets = VectorXd::Zero(x.cols());
        if (center) {
          offsets = y.colwise().mean().transpose();
          data.Y = y.rowwise() - offsets.transpose();
          x_offsets = x.colwise().mean().transpose();
          data.X = x.rowwise() - x_offsets.transpose();
        }
        const GibbsConfig config =
            make_config(iterations, burn_in, thin, alpha, rank_bound, seed, noise_model, store_draws, credible_level);
        ChainResult chain;
        {
          py::gil_scoped_release release;
          chain = run_chain(data, config);
        }
        py::dict out;
        out["C_mean"] = chain.summary.C_mean;
        out["C_lo"] = chain.summary.C_lo;
        out["C_hi"] = chain.summary.C_hi;
        out["kept"] = chain.summary.kept;
        out["loglik_trace"] = chain.diagnostics.loglik_trace;
        out["draws"] = chain.summary.draws;
        out["centering_offsets"] = offsets;
        out["predictor_offsets"] = x_offsets;
        return out;
      },
      py::arg("X"), py::arg("Y"), py::arg("iterations") = 2000, py::arg("burn_in") = 1000, py::arg("thin") = 1,
      py::arg("alpha") = 1.0, py::arg("rank_bound") = 0, py::arg("seed") = GibbsConfig{}.seed,
      py::arg("noise_model") = "diagonal", py::arg("store_draws") = false, py::arg("credible_level") = 0.95,
      py::arg("center") = true,
      "Runs the Gibbs sampler and returns the posterior mean, credible bounds and log-likelihood trace.");

  m.def("default_penalties", &default_penalties, py::arg("C_mean"), "mu_j = ||C_mean row j||^-2 (inf for zero rows).");

  m.def(
      "select_rows",
      [](const MatrixXd& c_mean, const MatrixXd& x, const VectorXd& mu) {
        const SparseEstimate est = select_rows(c_mean, x, mu);
        py::dict out;
        out["C_R"] = est.C_R;
        out["selected"] = est.selected;
        out["mu"] = est.mu;
        return out;
      },
      py::arg("C_mean"), py::arg("X"), py::arg("mu"), "Single-pass group soft-thresholding of the posterior mean.");

  m.def(
      "estimate_rank",
      [](const MatrixXd& c_r, const MatrixXd& x, const MatrixXd& y) {
        const RankEstimate r = estimate_rank(c_r, x, y);
        py::dict out;
        out["rank_hat"] = r.rank_hat;
        out["omega"] = r.omega;
        out["singular_values"] = r.singular_values;
        return out;
      },
      py::arg("C_R"), py::arg("X"), py::arg("Y"));

  m.def(
      "reduce_rank",
      [](const MatrixXd& c_r, const std::vector<Index>& selected, Index rank_hat) {
        return reduce_rank(c_r, selected, rank_hat).C_RR;
      },
      py::arg("C_R"), py::arg("selected"), py::arg("rank_hat"));

  m.def(
      "postprocess",
      [](const MatrixXd& c_mean, const MatrixXd& x, const MatrixXd& y) {
        const PostprocessResult r = postprocess(c_mean, x, y);
        py::dict out;
        out["C_R"] = r.sparse.C_R;
        out["selected"] = r.sparse.selected;
        out["mu"] = r.sparse.mu;
        out["rank_hat"] = r.rank.rank_hat;
        out["omega"] = r.rank.omega;
        out["singular_values"] = r.rank.singular_values;
        out["C_RR"] = r.bsml.C_RR;
        return out;
      },
      py::arg("C_mean"), py::arg("X"), py::arg("Y"), "Default penalties, row selection, rank estimate and truncation.");

  m.def(
      "generate",
      [](Index n, Index p, Index q, Index r0, Index s, const std::string& design, const std::string& noise,
         std::uint64_t seed, std::uint64_t replicate) {
        Rng rng(seed, replicate);
        const auto [data, truth] = generate(make_spec(n, p, q, r0, s, design, noise, seed), rng);
        py::dict out;
        out["X"] = data.X;
        out["Y"] = data.Y;
        out["C0"] = truth.C0;
        out["B_star"] = truth.B_star;
        out["A_star"] = truth.A_star;
        out["support"] = truth.support;
        out["Sigma0"] = truth.Sigma0;
        return out;
      },
      py::arg("n") = 100, py::arg("p") = 200, py::arg("q") = 30, py::arg("r0") = 3, py::arg("s") = 10,
      py::arg("design") = "independent", py::arg("noise") = "diagonal_uniform", py::arg("seed") = 1,
      py::arg("replicate") = 0, "Draws one synthetic replicate (X and Y centered).");

  m.def(
      "evaluate",
      [](const MatrixXd& c_hat, Index rank_hat, const std::vector<Index>& selected, const MatrixXd& c0,
         const std::vector<Index>& support, const MatrixXd& x) {
        Truth truth;
        truth.C0 = c0;
        truth.support = support;
        return metrics_dict(evaluate(c_hat, rank_hat, selected, truth, x));
      },
      py::arg("C_hat"), py::arg("rank_hat"), py::arg("selected"), py::arg("C0"), py::arg("support"), py::arg("X"));

  m.def(
      "run_study",
      [](Index n, Index p, Index q, Index r0, Index s, const std::string& design, const std::string& noise,
         std::uint64_t data_seed, std::size_t replicates, std::size_t iterations, std::size_t burn_in,
         const std::string& noise_model, std::uint64_t seed, const std::vector<Index>& rank_grid, unsigned threads) {
        const SimulationSpec spec = make_spec(n, p, q, r0, s, design, noise, data_seed);
        GibbsConfig config = make_config(iterations, burn_in, 1, 1.0, 0, seed, noise_model, false, 0.95);
        config.interval_reservoir = 0;
        StudyResult result;
        {
          py::gil_scoped_release release;
          result = run_study(spec, replicates, config, rank_grid, threads);
        }
        py::list rows;
        for (const auto& r : result.rows) {
          py::dict d = metrics_dict(r.metrics);
          d["replicate"] = r.replicate;
          d["rank_bound"] = r.rank_bound;
          d["failed"] = r.failed;
          d["error"] = r.error;
          d["posterior_mean_mspe"] = r.posterior_mean_mspe;
          d["seconds"] = r.seconds;
          rows.append(d);
        }
        py::list aggregates;
        for (const auto& a : result.aggregates) {
          py::dict d;
          d["rank_bound"] = a.rank_bound;
          d["succeeded"] = a.succeeded;
          d["failed"] = a.failed;
          d["mse"] = summary_dict(a.mse);
          d["mspe"] = summary_dict(a.mspe);
          d["rank_hat"] = summary_dict(a.rank_hat);
          d["sensitivity"] = summary_dict(a.sensitivity);
          d["specificity"] = summary_dict(a.specificity);
          aggregates.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["aggregates"] = aggregates;
        return out;
      },
      py::arg("n") = 100, py::arg("p") = 200, py::arg("q") = 30, py::arg("r0") = 3, py::arg("s") = 10,
      py::arg("design") = "independent", py::arg("noise") = "diagonal_uniform", py::arg("data_seed") = 1,
      py::arg("replicates") = 10, py::arg("iterations") = 2000, py::arg("burn_in") = 1000,
      py::arg("noise_model") = "diagonal", py::arg("seed") = GibbsConfig{}.seed,
      py::arg("rank_grid") = std::vector<Index>{}, py::arg("threads") = 0u,
      "Simulation study: generate, fit, post-process and score each replicate.");
}
