#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bsml {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Design X (n x p) and responses Y (n x q). The library checks centering
/// when `centered` is set; it never centers on its own.
struct Dataset {
  MatrixXd X;
  MatrixXd Y;
  bool centered = true;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
  Index q() const { return Y.cols(); }

  void validate() const;
};

enum class NoiseKind { kDiagonal, kFull };

/// Error covariance. Diagonal kind stores variances; full kind an SPD matrix.
struct NoiseState {
  NoiseKind kind = NoiseKind::kDiagonal;
  VectorXd sigma2;
  MatrixXd Sigma;

  static NoiseState diagonal(VectorXd variances);
  static NoiseState full(MatrixXd covariance);

  Index dim() const { return kind == NoiseKind::kDiagonal ? sigma2.size() : Sigma.rows(); }
  MatrixXd covariance() const;
  MatrixXd precision() const;
  /// W with W Sigma W^T = I (transpose of the Cholesky factor of Sigma^{-1}).
  MatrixXd whitening() const;
  double log_det() const;
  void validate() const;
};

/// One sweep's worth of sampled parameters. C = B A^T is always recomputed.
struct ChainState {
  MatrixXd B;       // p x k
  MatrixXd A;       // q x k
  MatrixXd lambda;  // p x k local scales
  VectorXd tau;     // k global scales
  NoiseState noise;

  Index rank_bound() const { return B.cols(); }
  MatrixXd coefficients() const { return B * A.transpose(); }
  void validate() const;

  /// B = 0, A = leading q x k identity block, unit scales, noise at the
  /// sample variances of Y (or their diagonal matrix for the full kind).
  static ChainState initial(const Dataset& data, Index rank_bound, NoiseKind kind);
};

enum class NoiseModel { kDiagonal, kInverseWishart };

struct GibbsConfig {
  std::size_t iterations = 2000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  double alpha = 1.0;
  Index rank_bound = 0;  // 0 means q
  NoiseModel noise_model = NoiseModel::kDiagonal;
  std::uint64_t seed = 20190101;
  bool store_draws = false;
  double credible_level = 0.95;
  std::size_t interval_reservoir = 1000;  // retained draws used for credible bounds

  // Clamps for conjugate-case checks; every block is sampled by default.
  bool update_A = true;
  bool update_noise = true;
  bool update_scales = true;

  Index effective_rank_bound(Index q) const { return rank_bound == 0 ? q : rank_bound; }
  std::size_t kept() const { return (iterations - burn_in) / thin; }
  void validate(Index q) const;
};

struct PosteriorSummary {
  MatrixXd C_mean;
  MatrixXd C_lo;
  MatrixXd C_hi;
  std::size_t kept = 0;
  double credible_level = 0.95;
  std::vector<MatrixXd> draws;  // only when store_draws
};

/// Equal-tail credible bounds from a set of retained draws.
std::pair<MatrixXd, MatrixXd> credible_bounds(const std::vector<MatrixXd>& draws, double level);

/// Log prior of (B | scales, A, scales, noise), up to additive constants
/// that do not depend on the state.
double log_prior_density(const ChainState& state);

/// alpha times the Gaussian log-likelihood of Y given C = B A^T and the noise.
double loglik(const ChainState& state, const Dataset& data, double alpha);

std::string to_string(NoiseModel model);
NoiseModel noise_model_from_string(const std::string& name);

}  // namespace bsml
