#include "bsml/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "bsml/error.hpp"

namespace bsml {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require(bool ok, const std::string& message) {
  if (!ok) throw ContractError(message);
}

// log of the half-Cauchy density 2 / (pi (1 + t^2)).
double log_half_cauchy(double t) { return std::log(2.0 / std::numbers::pi) - std::log1p(t * t); }

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void Dataset::validate() const {
  require(n() >= 2, "dataset needs at least two observations");
  require(Y.rows() == n(), "X and Y row counts differ");
  require(p() >= 1 && q() >= 1, "dataset has no predictors or no responses");
  require(X.allFinite() && Y.allFinite(), "dataset has non-finite entries");
  if (centered) {
    const VectorXd means = Y.colwise().mean();
    const double scale = std::max(1.0, Y.cwiseAbs().maxCoeff());
    require(means.cwiseAbs().maxCoeff() <= 1e-8 * scale, "responses are not column-centered");
  }
}

// ---------------------------------------------------------------------------

NoiseState NoiseState::diagonal(VectorXd variances) {
  NoiseState out;
  out.kind = NoiseKind::kDiagonal;
  out.sigma2 = std::move(variances);
  out.validate();
  return out;
}

NoiseState NoiseState::full(MatrixXd covariance) {
  NoiseState out;
  out.kind = NoiseKind::kFull;
  out.Sigma = std::move(covariance);
  out.validate();
  return out;
}

void NoiseState::validate() const {
  if (kind == NoiseKind::kDiagonal) {
    require(sigma2.size() >= 1, "noise: empty variance vector");
    for (Index h = 0; h < sigma2.size(); ++h) {
      require(sigma2[h] > 0.0 && std::isfinite(sigma2[h]), "noise: variance must be positive finite");
    }
    return;
  }
  require(Sigma.rows() == Sigma.cols() && Sigma.rows() >= 1, "noise: covariance must be square");
  if (!Sigma.allFinite() || (Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() >
                                1e-10 * std::max(1.0, Sigma.cwiseAbs().maxCoeff())) {
    throw NumericalError("Sigma", "covariance is not symmetric finite");
  }
  if (Eigen::LLT<MatrixXd>(Sigma).info() != Eigen::Success) {
    throw NumericalError("Sigma", "covariance is not positive definite");
  }
}

MatrixXd NoiseState::covariance() const {
  if (kind == NoiseKind::kDiagonal) return sigma2.asDiagonal();
  return Sigma;
}

MatrixXd NoiseState::precision() const {
  if (kind == NoiseKind::kDiagonal) return sigma2.cwiseInverse().asDiagonal();
  Eigen::LLT<MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("Sigma", "covariance is not positive definite");
  MatrixXd out = llt.solve(MatrixXd::Identity(Sigma.rows(), Sigma.rows()));
  return 0.5 * (out + out.transpose());
}

MatrixXd NoiseState::whitening() const {
  if (kind == NoiseKind::kDiagonal) return sigma2.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::LLT<MatrixXd> llt(precision());
  if (llt.info() != Eigen::Success) throw NumericalError("Sigma^-1", "precision is not positive definite");
  return llt.matrixL().transpose();
}

double NoiseState::log_det() const {
  if (kind == NoiseKind::kDiagonal) return sigma2.array().log().sum();
  Eigen::LLT<MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("Sigma", "covariance is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// ---------------------------------------------------------------------------

void ChainState::validate() const {
  const Index p = B.rows();
  const Index k = B.cols();
  require(A.cols() == k && lambda.rows() == p && lambda.cols() == k && tau.size() == k,
          "chain state: inconsistent block shapes");
  require(k <= A.rows(), "chain state: rank bound exceeds q");
  require(B.allFinite() && A.allFinite(), "chain state: B or A non-finite");
  require((lambda.array() > 0.0).all() && lambda.allFinite(), "chain state: local scales must be positive");
  require((tau.array() > 0.0).all() && tau.allFinite(), "chain state: global scales must be positive");
  require(noise.dim() == A.rows(), "chain state: noise dimension != q");
  noise.validate();
}

ChainState ChainState::initial(const Dataset& data, Index rank_bound, NoiseKind kind) {
  const Index p = data.p();
  const Index q = data.q();
  require(rank_bound >= 1 && rank_bound <= q, "rank bound must lie in [1, q]");
  ChainState s;
  s.B = MatrixXd::Zero(p, rank_bound);
  s.A = MatrixXd::Identity(q, rank_bound);
  s.lambda = MatrixXd::Ones(p, rank_bound);
  s.tau = VectorXd::Ones(rank_bound);
  const MatrixXd centered = data.Y.rowwise() - data.Y.colwise().mean();
  VectorXd var = centered.colwise().squaredNorm().transpose() / static_cast<double>(data.n() - 1);
  for (Index h = 0; h < q; ++h) {
    if (!(var[h] > 0.0)) var[h] = 1.0;
  }
  s.noise = kind == NoiseKind::kDiagonal ? NoiseState::diagonal(var)
                                         : NoiseState::full(MatrixXd(var.asDiagonal()));
  return s;
}

// ---------------------------------------------------------------------------

void GibbsConfig::validate(Index q) const {
  require(iterations >= 1, "iterations must be positive");
  require(burn_in < iterations, "burn_in must be smaller than iterations");
  require(thin >= 1, "thin must be at least 1");
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  require(rank_bound >= 0 && rank_bound <= q, "rank_bound must lie in [1, q] (0 selects q)");
  require(credible_level > 0.0 && credible_level < 1.0, "credible_level must lie in (0, 1)");
}

std::pair<MatrixXd, MatrixXd> credible_bounds(const std::vector<MatrixXd>& draws, double level) {
  require(!draws.empty(), "credible bounds need at least one draw");
  require(level > 0.0 && level < 1.0, "credible level must lie in (0, 1)");
  const Index rows = draws.front().rows();
  const Index cols = draws.front().cols();
  MatrixXd lo(rows, cols);
  MatrixXd hi(rows, cols);
  std::vector<double> values(draws.size());
  const double tail = 0.5 * (1.0 - level);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      for (std::size_t t = 0; t < draws.size(); ++t) values[t] = draws[t](i, j);
      std::sort(values.begin(), values.end());
      lo(i, j) = quantile_sorted(values, tail);
      hi(i, j) = quantile_sorted(values, 1.0 - tail);
    }
  }
  return {std::move(lo), std::move(hi)};
}

double log_prior_density(const ChainState& state) {
  state.validate();
  double total = 0.0;
  const Index p = state.B.rows();
  const Index k = state.B.cols();
  for (Index h = 0; h < k; ++h) {
    const double tau = state.tau[h];
    total += log_half_cauchy(tau);
    for (Index j = 0; j < p; ++j) {
      const double sd = state.lambda(j, h) * tau;
      const double b = state.B(j, h);
      total += -0.5 * kLog2Pi - std::log(sd) - 0.5 * (b * b) / (sd * sd);
      total += log_half_cauchy(state.lambda(j, h));
    }
  }
  total += -0.5 * kLog2Pi * static_cast<double>(state.A.size()) - 0.5 * state.A.squaredNorm();

  if (state.noise.kind == NoiseKind::kDiagonal) {
    // Improper pi(sigma^2) proportional to 1 / sigma^2.
    total -= state.noise.sigma2.array().log().sum();
  } else {
    // Inverse-Wishart(q, I_q) kernel.
    const double q = static_cast<double>(state.noise.dim());
    total += -0.5 * (q + q + 1.0) * state.noise.log_det() - 0.5 * state.noise.precision().trace();
  }
  return total;
}

double loglik(const ChainState& state, const Dataset& data, double alpha) {
  if (data.X.cols() != state.B.rows() || data.Y.cols() != state.A.rows() || data.X.rows() != data.Y.rows()) {
    throw ContractError("loglik: dimension mismatch");
  }
  const MatrixXd residual = data.Y - data.X * (state.B * state.A.transpose());
  const MatrixXd precision = state.noise.precision();
  const double quad = (residual * precision).cwiseProduct(residual).sum();
  const double n = static_cast<double>(data.n());
  const double q = static_cast<double>(data.q());
  return alpha * (-0.5 * n * q * kLog2Pi - 0.5 * n * state.noise.log_det() - 0.5 * quad);
}

std::string to_string(NoiseModel model) {
  return model == NoiseModel::kDiagonal ? "diagonal" : "inverse-wishart";
}

NoiseModel noise_model_from_string(const std::string& name) {
  if (name == "diagonal") return NoiseModel::kDiagonal;
  if (name == "inverse-wishart" || name == "inverse_wishart") return NoiseModel::kInverseWishart;
  throw ContractError("unknown noise model '" + name + "' (expected diagonal or inverse-wishart)");
}

}  // namespace bsml
