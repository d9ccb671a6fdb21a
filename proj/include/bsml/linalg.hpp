#pragma once

#include <cstddef>
#include <memory>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bsml/random.hpp"

namespace bsml {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Largest rows*cols a LinearMap will densify on request.
inline constexpr std::size_t kDefaultMaterializationBudget = std::size_t{1} << 22;

/// Abstract linear operator R^cols -> R^rows with an exact adjoint.
///
/// Structured subclasses override weighted_gram() so that X W X^T can be
/// formed without ever building the rows x cols matrix.
class LinearMap {
 public:
  virtual ~LinearMap() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual VectorXd forward(const Eigen::Ref<const VectorXd>& x) const = 0;
  virtual VectorXd adjoint(const Eigen::Ref<const VectorXd>& y) const = 0;

  /// X diag(weights) X^T (rows x rows). The generic version uses one
  /// adjoint/forward pair per output column.
  virtual MatrixXd weighted_gram(const Eigen::Ref<const VectorXd>& weights) const;

  /// Dense copy; throws ContractError when rows*cols exceeds the budget.
  MatrixXd densify() const;

  std::size_t materialization_budget() const { return budget_; }
  void set_materialization_budget(std::size_t entries) { budget_ = entries; }

 protected:
  void check_forward_input(Index size) const;
  void check_adjoint_input(Index size) const;

 private:
  std::size_t budget_ = kDefaultMaterializationBudget;
};

/// Plain dense matrix as a LinearMap; the small-problem fallback.
class DenseMap final : public LinearMap {
 public:
  explicit DenseMap(MatrixXd matrix);

  Index rows() const override { return matrix_.rows(); }
  Index cols() const override { return matrix_.cols(); }
  VectorXd forward(const Eigen::Ref<const VectorXd>& x) const override;
  VectorXd adjoint(const Eigen::Ref<const VectorXd>& y) const override;
  MatrixXd weighted_gram(const Eigen::Ref<const VectorXd>& weights) const override;

  const MatrixXd& matrix() const { return matrix_; }

 private:
  MatrixXd matrix_;
};

/// (M kron I_q): forward(vec(V)) = vec(V M^T) for V of shape q x c.
class KronIdentityLeft final : public LinearMap {
 public:
  KronIdentityLeft(MatrixXd m, Index q);

  Index rows() const override { return m_.rows() * q_; }
  Index cols() const override { return m_.cols() * q_; }
  VectorXd forward(const Eigen::Ref<const VectorXd>& x) const override;
  VectorXd adjoint(const Eigen::Ref<const VectorXd>& y) const override;

  /// M^T M kron I_q, the unweighted Gram of the adjoint side (cols x cols).
  MatrixXd normal_matrix() const;

 private:
  MatrixXd m_;
  Index q_;
};

/// (X kron A) acting on beta = vec(B^T): forward(beta) = vec(A B^T X^T),
/// i.e. vec((X B A^T)^T).
class KronRightIdentity final : public LinearMap {
 public:
  KronRightIdentity(MatrixXd x, MatrixXd a);

  Index rows() const override { return x_.rows() * a_.rows(); }
  Index cols() const override { return x_.cols() * a_.cols(); }
  VectorXd forward(const Eigen::Ref<const VectorXd>& beta) const override;
  VectorXd adjoint(const Eigen::Ref<const VectorXd>& y) const override;

  /// sum_h G_h kron a_h a_h^T with G_h = X diag(w_{.h}) X^T; O(k n^2 p + q^2 n^2 k).
  MatrixXd weighted_gram(const Eigen::Ref<const VectorXd>& weights) const override;

 private:
  MatrixXd x_;
  MatrixXd a_;
};

std::unique_ptr<KronIdentityLeft> kron_identity_left(const MatrixXd& m, Index q);
std::unique_ptr<KronRightIdentity> kron_right_identity(const MatrixXd& x, const MatrixXd& a);

/// Strictly positive, finite diagonal.
class DiagonalScale {
 public:
  explicit DiagonalScale(VectorXd entries);

  Index size() const { return entries_.size(); }
  const VectorXd& entries() const { return entries_; }

 private:
  VectorXd entries_;
};

/// Cholesky of an SPD matrix. On failure, retries once with
/// 1e-10 * mean(diag) added to the diagonal, then throws NumericalError
/// naming `quantity`.
Eigen::LLT<MatrixXd> spd_factor(MatrixXd matrix, std::string_view quantity);

/// One draw from N(Omega^{-1} Xt^T yt, Omega^{-1}), Omega = Xt^T Xt + Lambda^{-1},
/// by data augmentation: only the rows x rows system is factorized.
VectorXd sample_structured_gaussian(const LinearMap& xt, const DiagonalScale& lambda,
                                    const Eigen::Ref<const VectorXd>& yt, Rng& rng,
                                    Noise noise = Noise::kSample);

/// One draw from N(P^{-1} b, P^{-1}) given the precision P (SPD) and b.
/// Three triangular solves against the Cholesky factor of P.
VectorXd sample_gaussian_precision(const MatrixXd& precision, const Eigen::Ref<const VectorXd>& b,
                                   Rng& rng, Noise noise = Noise::kSample);

/// One draw from N(Omega^{-1} Xs^T yt, Omega^{-1}), Omega = Xs^T Xs + I.
VectorXd sample_gaussian_chol(const MatrixXd& xstar, const Eigen::Ref<const VectorXd>& yt, Rng& rng,
                              Noise noise = Noise::kSample);

/// Dense Kronecker product, for tests and small fallbacks.
MatrixXd kron(const MatrixXd& a, const MatrixXd& b);

/// Column-major vec and its inverse.
VectorXd vec(const MatrixXd& m);
MatrixXd unvec(const Eigen::Ref<const VectorXd>& v, Index rows, Index cols);

}  // namespace bsml
