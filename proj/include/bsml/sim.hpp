#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsml/model.hpp"
#include "bsml/random.hpp"

namespace bsml {

enum class DesignKind { kIndependent, kCompound };
enum class NoiseDesign { kDiagonalUniform, kCompound };

/// Synthetic study design: X rows N(0, Sigma_X), C0 = B* A*^T with s nonzero
/// leading rows in B*, errors N(0, Sigma0).
struct SimulationSpec {
  Index n = 100;
  Index p = 200;
  Index q = 30;
  Index r0 = 3;
  Index s = 10;
  DesignKind design = DesignKind::kIndependent;
  NoiseDesign noise = NoiseDesign::kDiagonalUniform;
  double rho = 0.5;           // off-diagonal correlation of compound designs
  double noise_lo = 0.5;      // diagonal noise variances ~ U(noise_lo, noise_hi)
  double noise_hi = 1.75;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Truth {
  MatrixXd C0;
  MatrixXd B_star;
  MatrixXd A_star;
  std::vector<Index> support;
  MatrixXd Sigma0;
};

struct Metrics {
  double mse = 0.0;
  double mspe = 0.0;
  Index rank_hat = 0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

/// Draws one replicate. Y is returned column-centered; X is left as drawn.
std::pair<Dataset, Truth> generate(const SimulationSpec& spec, Rng& rng);

Metrics evaluate(const MatrixXd& c_hat, Index rank_hat, const std::vector<Index>& selected,
                 const Truth& truth, const MatrixXd& x);

struct StudyRow {
  std::size_t replicate = 0;
  Index rank_bound = 0;
  bool failed = false;
  std::string error;
  Metrics metrics;
  double posterior_mean_mspe = 0.0;  // MSPE of the raw posterior mean
  double seconds = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;  // Monte Carlo standard error of the mean
  std::size_t count = 0;
};

struct StudyAggregate {
  Index rank_bound = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  MetricSummary mse;
  MetricSummary mspe;
  MetricSummary rank_hat;
  MetricSummary sensitivity;
  MetricSummary specificity;
  MetricSummary posterior_mean_mspe;
};

struct StudyResult {
  std::vector<StudyRow> rows;  // sorted by (rank grid position, replicate)
  std::vector<StudyAggregate> aggregates;
};

/// generate -> run_chain -> select -> rank -> reduce -> evaluate, per replicate
/// and per postulated rank in `rank_grid` (empty grid: the config's bound).
/// Replicates run on up to `threads` workers (0: BSML_THREADS or hardware).
StudyResult run_study(const SimulationSpec& spec, std::size_t replicates, const GibbsConfig& config,
                      const std::vector<Index>& rank_grid = {}, unsigned threads = 0);

/// Worker count from BSML_THREADS, else hardware concurrency, capped by `jobs`.
unsigned worker_count(unsigned requested, std::size_t jobs);

MetricSummary summarize(const std::vector<double>& values);

std::string to_string(DesignKind kind);
std::string to_string(NoiseDesign kind);
DesignKind design_kind_from_string(const std::string& name);
NoiseDesign noise_design_from_string(const std::string& name);

}  // namespace bsml
