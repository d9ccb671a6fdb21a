#include "bsml/linalg.hpp"

#include <cmath>
#include <string>

#include "bsml/error.hpp"

namespace bsml {
namespace {

std::string shape(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

void require_finite(const MatrixXd& m, std::string_view what) {
  if (!m.allFinite()) throw ContractError(std::string(what) + " has non-finite entries");
}

}  // namespace

// ---------------------------------------------------------------------------
// LinearMap

void LinearMap::check_forward_input(Index size) const {
  if (size != cols()) {
    throw ContractError("forward: expected length " + std::to_string(cols()) + ", got " +
                        std::to_string(size));
  }
}

void LinearMap::check_adjoint_input(Index size) const {
  if (size != rows()) {
    throw ContractError("adjoint: expected length " + std::to_string(rows()) + ", got " +
                        std::to_string(size));
  }
}

MatrixXd LinearMap::weighted_gram(const Eigen::Ref<const VectorXd>& weights) const {
  if (weights.size() != cols()) throw ContractError("weighted_gram: weight length mismatch");
  const Index m = rows();
  MatrixXd out(m, m);
  VectorXd unit = VectorXd::Zero(m);
  for (Index c = 0; c < m; ++c) {
    unit[c] = 1.0;
    VectorXd col = adjoint(unit);
    col.array() *= weights.array();
    out.col(c) = forward(col);
    unit[c] = 0.0;
  }
  return 0.5 * (out + out.transpose());
}

MatrixXd LinearMap::densify() const {
  const auto entries = static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols());
  if (entries > budget_) {
    throw ContractError("refusing to materialize " + shape(rows(), cols()) +
                        " operator (budget " + std::to_string(budget_) + " entries)");
  }
  MatrixXd out(rows(), cols());
  VectorXd unit = VectorXd::Zero(cols());
  for (Index c = 0; c < cols(); ++c) {
    unit[c] = 1.0;
    out.col(c) = forward(unit);
    unit[c] = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// DenseMap

DenseMap::DenseMap(MatrixXd matrix) : matrix_(std::move(matrix)) {
  require_finite(matrix_, "dense operator");
}

VectorXd DenseMap::forward(const Eigen::Ref<const VectorXd>& x) const {
  check_forward_input(x.size());
  return matrix_ * x;
}

VectorXd DenseMap::adjoint(const Eigen::Ref<const VectorXd>& y) const {
  check_adjoint_input(y.size());
  return matrix_.transpose() * y;
}

MatrixXd DenseMap::weighted_gram(const Eigen::Ref<const VectorXd>& weights) const {
  if (weights.size() != cols()) throw ContractError("weighted_gram: weight length mismatch");
  const MatrixXd scaled = matrix_ * weights.cwiseSqrt().asDiagonal();
  MatrixXd out = MatrixXd::Zero(rows(), rows());
  out.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  return out.selfadjointView<Eigen::Lower>();
}

// ---------------------------------------------------------------------------
// KronIdentityLeft

KronIdentityLeft::KronIdentityLeft(MatrixXd m, Index q) : m_(std::move(m)), q_(q) {
  if (q_ < 1) throw ContractError("kron_identity_left: q must be >= 1");
  require_finite(m_, "kron_identity_left factor");
}

VectorXd KronIdentityLeft::forward(const Eigen::Ref<const VectorXd>& x) const {
  check_forward_input(x.size());
  const Eigen::Map<const MatrixXd> v(x.data(), q_, m_.cols());
  MatrixXd out = v * m_.transpose();
  return Eigen::Map<const VectorXd>(out.data(), out.size());
}

VectorXd KronIdentityLeft::adjoint(const Eigen::Ref<const VectorXd>& y) const {
  check_adjoint_input(y.size());
  const Eigen::Map<const MatrixXd> w(y.data(), q_, m_.rows());
  MatrixXd out = w * m_;
  return Eigen::Map<const VectorXd>(out.data(), out.size());
}

MatrixXd KronIdentityLeft::normal_matrix() const {
  return kron(m_.transpose() * m_, MatrixXd::Identity(q_, q_));
}

// ---------------------------------------------------------------------------
// KronRightIdentity

KronRightIdentity::KronRightIdentity(MatrixXd x, MatrixXd a) : x_(std::move(x)), a_(std::move(a)) {
  require_finite(x_, "kron_right_identity design");
  require_finite(a_, "kron_right_identity loading");
}

VectorXd KronRightIdentity::forward(const Eigen::Ref<const VectorXd>& beta) const {
  check_forward_input(beta.size());
  const Eigen::Map<const MatrixXd> bt(beta.data(), a_.cols(), x_.cols());
  MatrixXd out = (a_ * bt) * x_.transpose();
  return Eigen::Map<const VectorXd>(out.data(), out.size());
}

VectorXd KronRightIdentity::adjoint(const Eigen::Ref<const VectorXd>& y) const {
  check_adjoint_input(y.size());
  const Eigen::Map<const MatrixXd> v(y.data(), a_.rows(), x_.rows());
  MatrixXd out = a_.transpose() * (v * x_);
  return Eigen::Map<const VectorXd>(out.data(), out.size());
}

MatrixXd KronRightIdentity::weighted_gram(const Eigen::Ref<const VectorXd>& weights) const {
  if (weights.size() != cols()) throw ContractError("weighted_gram: weight length mismatch");
  const Index n = x_.rows();
  const Index q = a_.rows();
  const Index k = a_.cols();
  const Eigen::Map<const MatrixXd> w(weights.data(), k, x_.cols());

  // Column h holds vec(X diag(w_h) X^T).
  MatrixXd grams(n * n, k);
  MatrixXd g(n, n);
  for (Index h = 0; h < k; ++h) {
    const MatrixXd scaled = x_ * w.row(h).transpose().cwiseSqrt().asDiagonal();
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    g = g.selfadjointView<Eigen::Lower>();
    grams.col(h) = Eigen::Map<const VectorXd>(g.data(), n * n);
  }
  // Column (l + l' q) holds a_{l.} * a_{l'.}, elementwise over h.
  MatrixXd outer(q * q, k);
  for (Index lp = 0; lp < q; ++lp) {
    for (Index l = 0; l < q; ++l) outer.row(l + lp * q) = a_.row(l).cwiseProduct(a_.row(lp));
  }
  const MatrixXd mixed = grams * outer.transpose();

  MatrixXd out(n * q, n * q);
  for (Index ip = 0; ip < n; ++ip) {
    for (Index lp = 0; lp < q; ++lp) {
      const Index col = ip * q + lp;
      for (Index i = 0; i < n; ++i) {
        const auto src = mixed.row(i + ip * n);
        for (Index l = 0; l < q; ++l) out(i * q + l, col) = src(l + lp * q);
      }
    }
  }
  return out;
}

std::unique_ptr<KronIdentityLeft> kron_identity_left(const MatrixXd& m, Index q) {
  return std::make_unique<KronIdentityLeft>(m, q);
}

std::unique_ptr<KronRightIdentity> kron_right_identity(const MatrixXd& x, const MatrixXd& a) {
  return std::make_unique<KronRightIdentity>(x, a);
}

// ---------------------------------------------------------------------------
// DiagonalScale

DiagonalScale::DiagonalScale(VectorXd entries) : entries_(std::move(entries)) {
  for (Index i = 0; i < entries_.size(); ++i) {
    const double v = entries_[i];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ContractError("diagonal scale entry " + std::to_string(i) + " is not positive finite");
    }
  }
}

// ---------------------------------------------------------------------------
// Factorization and samplers

Eigen::LLT<MatrixXd> spd_factor(MatrixXd matrix, std::string_view quantity) {
  if (!matrix.allFinite()) {
    throw NumericalError(std::string(quantity), "matrix has non-finite entries");
  }
  Eigen::LLT<MatrixXd> llt(matrix);
  if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) return llt;

  const double jitter = 1e-10 * matrix.diagonal().mean();
  matrix.diagonal().array() += jitter;
  llt.compute(matrix);
  if (llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite()) {
    throw NumericalError(std::string(quantity), "Cholesky failed after diagonal jitter");
  }
  return llt;
}

VectorXd sample_structured_gaussian(const LinearMap& xt, const DiagonalScale& lambda,
                                    const Eigen::Ref<const VectorXd>& yt, Rng& rng, Noise noise) {
  const Index m = xt.rows();
  const Index d = xt.cols();
  if (m < 1 || d < 1) throw ContractError("structured sampler: empty operator");
  if (lambda.size() != d) throw ContractError("structured sampler: scale length != cols");
  if (yt.size() != m) throw ContractError("structured sampler: response length != rows");
  if (!yt.allFinite()) throw NumericalError("ytilde", "non-finite response");

  const VectorXd& scale = lambda.entries();
  VectorXd u = VectorXd::Zero(d);
  VectorXd delta = VectorXd::Zero(m);
  if (noise == Noise::kSample) {
    u = rng.normal_vector(d).cwiseProduct(scale.cwiseSqrt());
    delta = rng.normal_vector(m);
  }
  const VectorXd v = xt.forward(u) + delta;

  MatrixXd system = xt.weighted_gram(scale);
  system.diagonal().array() += 1.0;
  const auto llt = spd_factor(std::move(system), "X Lambda X^T + I");
  const VectorXd w = llt.solve(yt - v);
  return u + scale.cwiseProduct(xt.adjoint(w));
}

VectorXd sample_gaussian_precision(const MatrixXd& precision, const Eigen::Ref<const VectorXd>& b,
                                   Rng& rng, Noise noise) {
  const Index d = precision.rows();
  if (precision.cols() != d || b.size() != d) {
    throw ContractError("precision sampler: shape mismatch " + shape(precision.rows(), precision.cols()));
  }
  const auto llt = spd_factor(precision, "posterior precision");
  const auto lower = llt.matrixL();
  const VectorXd v = lower.solve(b);
  VectorXd draw = lower.transpose().solve(v);
  if (noise == Noise::kSample) draw += lower.transpose().solve(rng.normal_vector(d));
  return draw;
}

VectorXd sample_gaussian_chol(const MatrixXd& xstar, const Eigen::Ref<const VectorXd>& yt, Rng& rng,
                              Noise noise) {
  if (yt.size() != xstar.rows()) throw ContractError("chol sampler: response length != rows");
  if (!xstar.allFinite()) throw NumericalError("Xstar", "non-finite design");
  MatrixXd precision = MatrixXd::Identity(xstar.cols(), xstar.cols());
  precision.selfadjointView<Eigen::Lower>().rankUpdate(xstar.transpose());
  precision = precision.selfadjointView<Eigen::Lower>();
  return sample_gaussian_precision(precision, xstar.transpose() * yt, rng, noise);
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

VectorXd vec(const MatrixXd& m) { return Eigen::Map<const VectorXd>(m.data(), m.size()); }

MatrixXd unvec(const Eigen::Ref<const VectorXd>& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw ContractError("unvec: length mismatch");
  return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

}  // namespace bsml
