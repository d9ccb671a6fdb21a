#pragma once

#include <optional>
#include <vector>

#include "bsml/linalg.hpp"
#include "bsml/model.hpp"
#include "bsml/random.hpp"

namespace bsml {

struct ChainDiagnostics {
  std::vector<double> loglik_trace;  // one entry per sweep
  bool gibbs = true;                 // every move is an exact conditional draw
  double seconds_B = 0.0;
  double seconds_A = 0.0;
  double seconds_noise = 0.0;
  double seconds_scales = 0.0;
};

struct ChainResult {
  PosteriorSummary summary;
  ChainDiagnostics diagnostics;
  ChainState final_state;
};

// Full-conditional updates. `alpha` tempers the likelihood only.

/// B | rest via the data-augmentation sampler on beta = vec(B^T), with the
/// design Sigma~^{-1/2}(X kron A) kept matrix-free.
void step_B(ChainState& state, const Dataset& data, double alpha, Rng& rng,
            Noise noise = Noise::kSample);

/// vec(A) | rest via the Cholesky sampler on the q*k block.
void step_A(ChainState& state, const Dataset& data, double alpha, Rng& rng,
            Noise noise = Noise::kSample);

/// Noise | rest: inverse-Gamma per response (diagonal) or inverse-Wishart (full).
void step_noise(ChainState& state, const Dataset& data, double alpha, Rng& rng);

/// Conjugate noise draw from an already-tempered sufficient statistic:
/// diagonal kind uses shape effective_n/2 and scale crossprod_hh/2; full kind
/// draws inverse-Wishart(q + effective_n, I + crossprod).
NoiseState draw_noise(NoiseKind kind, double effective_n, const MatrixXd& crossprod, Rng& rng);

/// Inverse-Wishart(df, scale) by the Bartlett decomposition of the
/// corresponding Wishart precision.
MatrixXd sample_inverse_wishart(double df, const MatrixXd& scale, Rng& rng);

/// Local and global horseshoe scales by slice sampling on eta = scale^{-2}.
void step_scales(ChainState& state, Rng& rng);

struct SliceDraw {
  double eta;    // new value
  double bound;  // truncation point (1 - u) / u of the slice
};

/// Slice move for a local scale: eta has density prop. to exp(-rate * eta) / (1 + eta).
SliceDraw slice_local_scale(double eta, double rate, Rng& rng);
/// Slice move for a global scale: density prop. to eta^{shape-1} exp(-rate * eta) / (1 + eta).
SliceDraw slice_global_scale(double eta, double shape, double rate, Rng& rng);

/// Inverse-CDF draws restricted to (0, upper).
double truncated_exponential(double rate, double upper, Rng& rng);
double truncated_gamma(double shape, double rate, double upper, Rng& rng);

/// One Gibbs cycle B -> A -> noise -> scales, honoring the config's clamps.
void gibbs_sweep(ChainState& state, const Dataset& data, const GibbsConfig& config, Rng& rng,
                 ChainDiagnostics* timing = nullptr);

/// Runs a full chain and summarizes C = B A^T over retained sweeps.
/// Numerical failures are rethrown as ChainError carrying the sweep index.
ChainResult run_chain(const Dataset& data, const GibbsConfig& config, Rng& rng,
                      std::optional<ChainState> initial = std::nullopt);
ChainResult run_chain(const Dataset& data, const GibbsConfig& config);

}  // namespace bsml
