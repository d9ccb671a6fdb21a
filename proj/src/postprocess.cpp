#include "bsml/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "bsml/error.hpp"

namespace bsml {
namespace {

constexpr double kZeroRowNorm = 1e-14;

VectorXd singular_values_padded(const MatrixXd& m, Index length) {
  VectorXd out = VectorXd::Zero(length);
  if (m.size() == 0) return out;
  const Eigen::BDCSVD<MatrixXd> svd(m);
  const VectorXd& s = svd.singularValues();
  out.head(std::min(length, s.size())) = s.head(std::min(length, s.size()));
  return out;
}

}  // namespace

VectorXd default_penalties(const MatrixXd& c_mean) {
  if (!c_mean.allFinite()) throw ContractError("default_penalties: non-finite posterior mean");
  VectorXd mu(c_mean.rows());
  for (Index j = 0; j < c_mean.rows(); ++j) {
    const double norm = c_mean.row(j).norm();
    mu[j] = norm < kZeroRowNorm ? std::numeric_limits<double>::infinity() : 1.0 / (norm * norm);
  }
  return mu;
}

SparseEstimate select_rows(const MatrixXd& c_mean, const MatrixXd& x, const VectorXd& mu) {
  if (x.cols() != c_mean.rows() || mu.size() != c_mean.rows()) {
    throw ContractError("select_rows: dimension mismatch");
  }
  SparseEstimate out;
  out.mu = mu;
  out.C_R = MatrixXd::Zero(c_mean.rows(), c_mean.cols());
  for (Index j = 0; j < c_mean.rows(); ++j) {
    if (!(mu[j] > 0.0)) throw ContractError("select_rows: penalties must be positive");
    const double col_sq = x.col(j).squaredNorm();
    const double row_norm = c_mean.row(j).norm();
    if (col_sq == 0.0 || row_norm == 0.0 || std::isinf(mu[j])) continue;
    const double factor = 1.0 - mu[j] / (2.0 * col_sq * row_norm);
    if (factor <= 0.0) continue;
    out.C_R.row(j) = factor * c_mean.row(j);
    out.selected.push_back(j);
  }
  return out;
}

RankEstimate estimate_rank(const MatrixXd& c_r, const MatrixXd& x, const MatrixXd& y) {
  if (x.cols() != c_r.rows() || y.rows() != x.rows() || y.cols() != c_r.cols()) {
    throw ContractError("estimate_rank: dimension mismatch");
  }
  const MatrixXd fitted = x * c_r;
  RankEstimate out;
  out.singular_values = singular_values_padded(fitted, c_r.cols());
  // Round-off singular values count as zero (numerical rank).
  const double floor = out.singular_values[0] * static_cast<double>(std::max(fitted.rows(), fitted.cols())) *
                       std::numeric_limits<double>::epsilon();
  for (Index h = 0; h < out.singular_values.size(); ++h) {
    if (out.singular_values[h] <= floor) out.singular_values[h] = 0.0;
  }
  out.omega = singular_values_padded(y - fitted, 1)[0];
  out.rank_hat = (out.singular_values.array() > out.omega).count();
  return out;
}

BsmlEstimate reduce_rank(const MatrixXd& c_r, const std::vector<Index>& selected, Index rank_hat) {
  if (rank_hat < 0) throw ContractError("reduce_rank: negative rank");
  BsmlEstimate out;
  out.rank_hat = rank_hat;
  out.C_RR = MatrixXd::Zero(c_r.rows(), c_r.cols());
  if (selected.empty() || rank_hat == 0) return out;

  MatrixXd sub(static_cast<Index>(selected.size()), c_r.cols());
  for (std::size_t i = 0; i < selected.size(); ++i) sub.row(static_cast<Index>(i)) = c_r.row(selected[i]);
  const Eigen::BDCSVD<MatrixXd> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index keep = std::min<Index>(rank_hat, svd.singularValues().size());
  const MatrixXd truncated = svd.matrixU().leftCols(keep) * svd.singularValues().head(keep).asDiagonal() *
                             svd.matrixV().leftCols(keep).transpose();
  for (std::size_t i = 0; i < selected.size(); ++i) out.C_RR.row(selected[i]) = truncated.row(static_cast<Index>(i));
  return out;
}

PostprocessResult postprocess(const MatrixXd& c_mean, const MatrixXd& x, const MatrixXd& y) {
  PostprocessResult out;
  out.sparse = select_rows(c_mean, x, default_penalties(c_mean));
  out.rank = estimate_rank(out.sparse.C_R, x, y);
  out.bsml = reduce_rank(out.sparse.C_R, out.sparse.selected, out.rank.rank_hat);
  out.bsml.singular_values = out.rank.singular_values;
  out.bsml.omega = out.rank.omega;
  return out;
}

VectorXd selection_frequency(const std::vector<MatrixXd>& draws, const MatrixXd& x) {
  if (draws.empty()) throw ContractError("selection_frequency: no draws");
  VectorXd counts = VectorXd::Zero(draws.front().rows());
  for (const auto& c : draws) {
    const auto est = select_rows(c, x, default_penalties(c));
    for (const Index j : est.selected) counts[j] += 1.0;
  }
  return counts / static_cast<double>(draws.size());
}

}  // namespace bsml
