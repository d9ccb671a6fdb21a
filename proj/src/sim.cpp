#include "bsml/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "bsml/error.hpp"
#include "bsml/gibbs.hpp"
#include "bsml/postprocess.hpp"

namespace bsml {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ContractError(message);
}

// Rows i.i.d. N(0, (1 - rho) I + rho 11^T) via a shared factor.
MatrixXd compound_rows(Index rows, Index cols, double rho, Rng& rng) {
  MatrixXd out(rows, cols);
  const double shared = std::sqrt(rho);
  const double own = std::sqrt(1.0 - rho);
  for (Index i = 0; i < rows; ++i) {
    const double z0 = rng.normal();
    for (Index j = 0; j < cols; ++j) out(i, j) = shared * z0 + own * rng.normal();
  }
  return out;
}

MatrixXd normal_matrix(Index rows, Index cols, Rng& rng) {
  MatrixXd out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = rng.normal();
  }
  return out;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void SimulationSpec::validate() const {
  require(n >= 2, "simulation: n must be at least 2");
  require(p >= 1 && q >= 1, "simulation: p and q must be positive");
  require(r0 >= 0 && r0 <= std::min(p, q), "simulation: r0 must lie in [0, min(p, q)]");
  require(s >= 0 && s <= p, "simulation: s must lie in [0, p]");
  require(rho >= 0.0 && rho < 1.0, "simulation: rho must lie in [0, 1)");
  require(noise_lo > 0.0 && noise_hi >= noise_lo, "simulation: noise variance range invalid");
}

std::pair<Dataset, Truth> generate(const SimulationSpec& spec, Rng& rng) {
  spec.validate();
  Truth truth;
  MatrixXd x = spec.design == DesignKind::kIndependent ? normal_matrix(spec.n, spec.p, rng)
                                                       : compound_rows(spec.n, spec.p, spec.rho, rng);
  truth.A_star = normal_matrix(spec.q, spec.r0, rng);
  truth.B_star = MatrixXd::Zero(spec.p, spec.r0);
  for (Index j = 0; j < spec.s; ++j) {
    for (Index h = 0; h < spec.r0; ++h) truth.B_star(j, h) = rng.normal();
    truth.support.push_back(j);
  }
  truth.C0 = truth.B_star * truth.A_star.transpose();

  MatrixXd noise;
  if (spec.noise == NoiseDesign::kDiagonalUniform) {
    VectorXd var(spec.q);
    for (Index h = 0; h < spec.q; ++h) var[h] = spec.noise_lo + (spec.noise_hi - spec.noise_lo) * rng.uniform();
    truth.Sigma0 = var.asDiagonal();
    noise = normal_matrix(spec.n, spec.q, rng) * var.cwiseSqrt().asDiagonal();
  } else {
    truth.Sigma0 = MatrixXd::Constant(spec.q, spec.q, spec.rho);
    truth.Sigma0.diagonal().setOnes();
    noise = compound_rows(spec.n, spec.q, spec.rho, rng);
  }

  Dataset data;
  data.Y = x * truth.C0 + noise;
  data.Y = data.Y.rowwise() - data.Y.colwise().mean();
  data.X = x.rowwise() - x.colwise().mean();
  data.centered = true;
  return {std::move(data), std::move(truth)};
}

Metrics evaluate(const MatrixXd& c_hat, Index rank_hat, const std::vector<Index>& selected,
                 const Truth& truth, const MatrixXd& x) {
  const Index p = truth.C0.rows();
  const Index q = truth.C0.cols();
  if (c_hat.rows() != p || c_hat.cols() != q || x.cols() != p) {
    throw ContractError("evaluate: dimension mismatch");
  }
  Metrics m;
  const MatrixXd diff = c_hat - truth.C0;
  m.mse = diff.squaredNorm() / static_cast<double>(p * q);
  m.mspe = (x * diff).squaredNorm() / static_cast<double>(x.rows() * q);
  m.rank_hat = rank_hat;

  std::vector<bool> in_support(static_cast<std::size_t>(p), false);
  for (const Index j : truth.support) in_support[static_cast<std::size_t>(j)] = true;
  std::vector<bool> chosen(static_cast<std::size_t>(p), false);
  for (const Index j : selected) chosen[static_cast<std::size_t>(j)] = true;

  std::size_t tp = 0, tn = 0, pos = 0, neg = 0;
  for (std::size_t j = 0; j < static_cast<std::size_t>(p); ++j) {
    if (in_support[j]) {
      ++pos;
      tp += chosen[j] ? 1 : 0;
    } else {
      ++neg;
      tn += chosen[j] ? 0 : 1;
    }
  }
  m.sensitivity = ratio(tp, pos);
  m.specificity = ratio(tn, neg);
  return m;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (const double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return out;
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned workers = requested;
  if (workers == 0) {
    if (const char* env = std::getenv("BSML_THREADS")) {
      const long parsed = std::strtol(env, nullptr, 10);
      if (parsed > 0) workers = static_cast<unsigned>(parsed);
    }
  }
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, jobs)));
}

StudyResult run_study(const SimulationSpec& spec, std::size_t replicates, const GibbsConfig& config,
                      const std::vector<Index>& rank_grid, unsigned threads) {
  spec.validate();
  require(replicates >= 1, "run_study: replicates must be at least 1");
  std::vector<Index> grid = rank_grid;
  if (grid.empty()) grid.push_back(config.effective_rank_bound(spec.q));
  for (const Index k : grid) require(k >= 1 && k <= spec.q, "run_study: postulated rank outside [1, q]");

  const std::size_t jobs = grid.size() * replicates;
  std::vector<StudyRow> rows(jobs);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t g = job / replicates;
      const std::size_t rep = job % replicates;
      StudyRow& row = rows[job];
      row.replicate = rep;
      row.rank_bound = grid[g];
      const auto start = std::chrono::steady_clock::now();
      try {
        Rng data_rng(spec.seed, rep);
        auto [data, truth] = generate(spec, data_rng);
        GibbsConfig cfg = config;
        cfg.rank_bound = grid[g];
        cfg.seed = derive_seed(config.seed, rep);
        cfg.store_draws = false;
        const ChainResult chain = run_chain(data, cfg);
        const PostprocessResult post = postprocess(chain.summary.C_mean, data.X, data.Y);
        row.metrics = evaluate(post.bsml.C_RR, post.rank.rank_hat, post.sparse.selected, truth, data.X);
        row.posterior_mean_mspe = (data.X * (chain.summary.C_mean - truth.C0)).squaredNorm() /
                                  static_cast<double>(data.X.rows() * spec.q);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };

  const unsigned workers = worker_count(threads, jobs);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  StudyResult result;
  result.rows = std::move(rows);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    StudyAggregate agg;
    agg.rank_bound = grid[g];
    std::vector<double> mse, mspe, rank, sens, spec_v, raw_mspe;
    for (std::size_t rep = 0; rep < replicates; ++rep) {
      const StudyRow& row = result.rows[g * replicates + rep];
      if (row.failed) {
        ++agg.failed;
        continue;
      }
      ++agg.succeeded;
      mse.push_back(row.metrics.mse);
      mspe.push_back(row.metrics.mspe);
      raw_mspe.push_back(row.posterior_mean_mspe);
      rank.push_back(static_cast<double>(row.metrics.rank_hat));
      if (row.metrics.sensitivity) sens.push_back(*row.metrics.sensitivity);
      if (row.metrics.specificity) spec_v.push_back(*row.metrics.specificity);
    }
    agg.mse = summarize(mse);
    agg.mspe = summarize(mspe);
    agg.rank_hat = summarize(rank);
    agg.sensitivity = summarize(sens);
    agg.specificity = summarize(spec_v);
    agg.posterior_mean_mspe = summarize(raw_mspe);
    result.aggregates.push_back(agg);
  }
  return result;
}

std::string to_string(DesignKind kind) { return kind == DesignKind::kIndependent ? "independent" : "compound"; }

std::string to_string(NoiseDesign kind) {
  return kind == NoiseDesign::kDiagonalUniform ? "diagonal_uniform" : "compound";
}

DesignKind design_kind_from_string(const std::string& name) {
  if (name == "independent") return DesignKind::kIndependent;
  if (name == "compound" || name == "correlated") return DesignKind::kCompound;
  throw ContractError("unknown design '" + name + "' (expected independent or compound)");
}

NoiseDesign noise_design_from_string(const std::string& name) {
  if (name == "diagonal_uniform" || name == "diagonal") return NoiseDesign::kDiagonalUniform;
  if (name == "compound") return NoiseDesign::kCompound;
  throw ContractError("unknown noise design '" + name + "' (expected diagonal_uniform or compound)");
}

}  // namespace bsml
