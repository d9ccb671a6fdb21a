#pragma once

#include <vector>

#include <Eigen/Core>

namespace bsml {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Row-sparse estimate from one group-lasso pass over the posterior mean.
struct SparseEstimate {
  MatrixXd C_R;
  std::vector<Index> selected;  // ascending row indices of nonzero rows
  VectorXd mu;                  // penalties used (+inf allowed)
};

struct RankEstimate {
  Index rank_hat = 0;
  double omega = 0.0;
  VectorXd singular_values;  // of X C_R, descending, length q
};

/// Row-sparse, rank-reduced estimate.
struct BsmlEstimate {
  MatrixXd C_RR;
  Index rank_hat = 0;
  VectorXd singular_values;
  double omega = 0.0;
};

/// mu_j = ||C_mean row j||^{-2}; +inf for rows with norm below 1e-14.
///
/// Rows of a null predictor have norm of order log(q)/n, so with
/// ||X_j||^2 of order n the threshold statistic mu_j / ||X_j^T R_j|| grows
/// like n^{1/2} / (log q)^{3/2} and such rows are removed.
VectorXd default_penalties(const MatrixXd& c_mean);

/// Single parallel pass of group soft-thresholding started at C_mean:
/// row j becomes (1 - mu_j / (2 ||X_j||^2 ||C_mean_j||))_+ * C_mean_j.
SparseEstimate select_rows(const MatrixXd& c_mean, const MatrixXd& x, const VectorXd& mu);

/// r_hat = #{h : s_h(X C_R) > omega}, omega = largest singular value of Y - X C_R.
/// Singular values at round-off level (s_1 * max(n, q) * eps) are reported as 0.
RankEstimate estimate_rank(const MatrixXd& c_r, const MatrixXd& x, const MatrixXd& y);

/// Truncates the SVD of the selected-row submatrix to rank_hat terms and
/// puts the zero rows back. singular_values/omega are left empty.
BsmlEstimate reduce_rank(const MatrixXd& c_r, const std::vector<Index>& selected, Index rank_hat);

/// The whole post-processing chain with default penalties.
struct PostprocessResult {
  SparseEstimate sparse;
  RankEstimate rank;
  BsmlEstimate bsml;
};
PostprocessResult postprocess(const MatrixXd& c_mean, const MatrixXd& x, const MatrixXd& y);

/// Fraction of draws in which each row survives selection (default penalties per draw).
VectorXd selection_frequency(const std::vector<MatrixXd>& draws, const MatrixXd& x);

}  // namespace bsml
