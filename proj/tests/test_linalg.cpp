#include <doctest.h>

#include <cmath>

#include "bsml/error.hpp"
#include "bsml/linalg.hpp"
#include "support.hpp"

using namespace bsml;
using bsml::testing::gaussian_moments;

namespace {

MatrixXd random_matrix(Index r, Index c, Rng& rng) {
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

double rel_diff(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

// Dense oracle for N(Omega^{-1} X^T y, Omega^{-1}), Omega = X^T X + D^{-1}.
std::pair<VectorXd, MatrixXd> dense_posterior(const MatrixXd& x, const VectorXd& prior_var, const VectorXd& y) {
  MatrixXd omega = x.transpose() * x;
  omega.diagonal() += prior_var.cwiseInverse();
  const Eigen::LLT<MatrixXd> llt(omega);
  const MatrixXd cov = llt.solve(MatrixXd::Identity(omega.rows(), omega.cols()));
  return {cov * x.transpose() * y, cov};
}

}  // namespace

TEST_CASE("kron_identity_left: identity and scalar cases") {
  const auto id = kron_identity_left(MatrixXd::Identity(2, 2), 3);
  VectorXd x(6);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(id->rows() == 6);
  CHECK(id->cols() == 6);
  CHECK((id->forward(x) - x).norm() == 0.0);

  const auto scalar = kron_identity_left(MatrixXd::Constant(1, 1, 2.0), 2);
  VectorXd v(2);
  v << 1, 2;
  const VectorXd out = scalar->forward(v);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 4.0);
}

TEST_CASE("kron_identity_left matches the dense Kronecker product") {
  Rng rng(11);
  const MatrixXd m = random_matrix(3, 2, rng);
  const auto op = kron_identity_left(m, 2);
  const MatrixXd dense = kron(m, MatrixXd::Identity(2, 2));
  const VectorXd x = rng.normal_vector(4);
  CHECK((op->forward(x) - dense * x).cwiseAbs().maxCoeff() < 1e-12);
  const VectorXd y = rng.normal_vector(6);
  CHECK((op->adjoint(y) - dense.transpose() * y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rel_diff(op->normal_matrix(), dense.transpose() * dense) < 1e-12);
}

TEST_CASE("kron_right_identity: identity, dense oracle, triple product") {
  const auto id = kron_right_identity(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
  Rng rng(5);
  const VectorXd x = rng.normal_vector(4);
  CHECK((id->forward(x) - x).norm() == 0.0);

  const MatrixXd X = random_matrix(2, 2, rng);
  const MatrixXd A = random_matrix(2, 2, rng);
  const auto op = kron_right_identity(X, A);
  CHECK((op->forward(x) - kron(X, A) * x).cwiseAbs().maxCoeff() < 1e-12);

  // beta = vec(B^T) with a zero row in B; output is vec((X B A^T)^T).
  const MatrixXd X3 = random_matrix(4, 3, rng);
  const MatrixXd A3 = random_matrix(2, 2, rng);
  MatrixXd B = random_matrix(3, 2, rng);
  B.row(1).setZero();
  const MatrixXd bt = B.transpose();
  const auto op3 = kron_right_identity(X3, A3);
  const VectorXd got = op3->forward(vec(bt));
  MatrixXd expected = X3 * B * A3.transpose();
  expected.transposeInPlace();
  CHECK((got - vec(expected)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("apply with the wrong length is a contract violation") {
  const auto op = kron_right_identity(MatrixXd::Ones(3, 2), MatrixXd::Ones(2, 2));
  CHECK_THROWS_AS(op->forward(VectorXd::Ones(5)), ContractError);
  CHECK_THROWS_AS(op->adjoint(VectorXd::Ones(4)), ContractError);
  CHECK_THROWS_AS(kron_identity_left(MatrixXd::Ones(2, 2), 0), ContractError);
}

TEST_CASE("adjoint is the transpose of forward and densify matches, over random shapes") {
  Rng rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below_or_equal(5));
    const Index p = 1 + static_cast<Index>(rng.below_or_equal(5));
    const Index q = 1 + static_cast<Index>(rng.below_or_equal(3));
    const Index k = 1 + static_cast<Index>(rng.below_or_equal(static_cast<std::uint64_t>(q - 1)));
    const MatrixXd X = random_matrix(n, p, rng);
    const MatrixXd A = random_matrix(q, k, rng);
    const KronRightIdentity right(X, A);
    const KronIdentityLeft left(X, q);
    const DenseMap dense(random_matrix(n, p, rng));
    for (const LinearMap* op : {static_cast<const LinearMap*>(&right), static_cast<const LinearMap*>(&left),
                                static_cast<const LinearMap*>(&dense)}) {
      const VectorXd u = rng.normal_vector(op->cols());
      const VectorXd v = rng.normal_vector(op->rows());
      const double lhs = op->forward(u).dot(v);
      const double rhs = u.dot(op->adjoint(v));
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
      const MatrixXd full = op->densify();
      CHECK(rel_diff(full * u, op->forward(u)) < 1e-10);
      const VectorXd w = rng.normal_vector(op->cols()).cwiseAbs();
      CHECK(rel_diff(op->weighted_gram(w), full * w.asDiagonal() * full.transpose()) < 1e-10);
    }
    CHECK(rel_diff(right.densify(), kron(X, A)) < 1e-12);
  }
}

TEST_CASE("Kronecker operators refuse to materialize beyond the budget") {
  KronRightIdentity op(MatrixXd::Ones(10, 20), MatrixXd::Ones(3, 3));
  op.set_materialization_budget(100);
  CHECK_THROWS_AS(op.densify(), ContractError);
  // The sampler only needs the rows x rows system, so it still runs.
  Rng rng(1);
  const VectorXd draw = sample_structured_gaussian(op, DiagonalScale(VectorXd::Ones(60)), VectorXd::Ones(30), rng);
  CHECK(draw.size() == 60);
  CHECK(draw.allFinite());
}

TEST_CASE("DiagonalScale rejects non-positive and non-finite entries") {
  CHECK_THROWS_AS(DiagonalScale(VectorXd::Zero(2)), ContractError);
  VectorXd bad(2);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(DiagonalScale{bad}, ContractError);
  CHECK_NOTHROW(DiagonalScale(VectorXd::Ones(3)));
}

TEST_CASE("spd_factor retries with jitter once, then fails loudly") {
  MatrixXd singular(2, 2);
  singular << 1, 1, 1, 1;
  CHECK_NOTHROW(spd_factor(singular, "singular"));

  MatrixXd negative = -MatrixXd::Identity(2, 2);
  try {
    spd_factor(negative, "negative");
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(e.quantity() == "negative");
  }
  MatrixXd nan = MatrixXd::Identity(2, 2);
  nan(0, 1) = std::nan("");
  CHECK_THROWS_AS(spd_factor(nan, "nan"), NumericalError);
}

TEST_CASE("Woodbury consistency on random small instances") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 1 + static_cast<Index>(rng.below_or_equal(7));
    const Index d = 1 + static_cast<Index>(rng.below_or_equal(7));
    const MatrixXd x = random_matrix(m, d, rng);
    VectorXd lam(d);
    for (Index i = 0; i < d; ++i) lam[i] = std::exp(rng.normal());
    MatrixXd inner = x * lam.asDiagonal() * x.transpose();
    inner.diagonal().array() += 1.0;
    const MatrixXd lhs = lam.asDiagonal() * x.transpose() * inner.inverse();
    MatrixXd omega = x.transpose() * x;
    omega.diagonal() += lam.cwiseInverse();
    const MatrixXd rhs = omega.inverse() * x.transpose();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("structured sampler with forced-zero noise returns the posterior mean") {
  Rng rng(7);
  const MatrixXd x = random_matrix(4, 6, rng);
  VectorXd lam(6);
  lam << 0.5, 1, 2, 3, 0.1, 4;
  const VectorXd y = rng.normal_vector(4);
  const VectorXd draw = sample_structured_gaussian(DenseMap(x), DiagonalScale(lam), y, rng, Noise::kZero);
  const auto [mean, cov] = dense_posterior(x, lam, y);
  CHECK((draw - mean).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("structured sampler moments match the dense Cholesky oracle") {
  MatrixXd x(2, 3);
  x << 1.0, -0.5, 2.0, 0.3, 1.5, -1.0;
  VectorXd lam(3);
  lam << 1, 4, 9;
  VectorXd y(2);
  y << 0.7, -1.2;
  const auto [mean, cov] = dense_posterior(x, lam, y);

  Rng rng(2024);
  const int draws = 100000;
  MatrixXd samples(draws, 3);
  const DenseMap op(x);
  const DiagonalScale scale(lam);
  for (int i = 0; i < draws; ++i) samples.row(i) = sample_structured_gaussian(op, scale, y, rng).transpose();
  const auto check = gaussian_moments(samples, mean, cov);
  CHECK(check.max_mean_z < 4.0);
  CHECK(check.max_cov_z < 4.0);
}

TEST_CASE("structured sampler through the Kronecker operator matches the dense oracle") {
  Rng rng(99);
  const MatrixXd X = random_matrix(3, 2, rng);
  const MatrixXd A = random_matrix(2, 2, rng);
  VectorXd lam(4);
  lam << 0.5, 2.0, 1.0, 3.0;
  const VectorXd y = rng.normal_vector(6);
  const auto [mean, cov] = dense_posterior(kron(X, A), lam, y);
  const KronRightIdentity op(X, A);
  const DiagonalScale scale(lam);
  const int draws = 100000;
  MatrixXd samples(draws, 4);
  for (int i = 0; i < draws; ++i) samples.row(i) = sample_structured_gaussian(op, scale, y, rng).transpose();
  const auto check = gaussian_moments(samples, mean, cov);
  CHECK(check.max_mean_z < 4.0);
  CHECK(check.max_cov_z < 4.0);
}

TEST_CASE("structured sampler with a zero operator draws from the prior") {
  VectorXd lam(3);
  lam << 1, 4, 9;
  const DenseMap zero(MatrixXd::Zero(2, 3));
  Rng rng(8);
  const int draws = 100000;
  MatrixXd samples(draws, 3);
  for (int i = 0; i < draws; ++i) {
    samples.row(i) = sample_structured_gaussian(zero, DiagonalScale(lam), VectorXd::Zero(2), rng).transpose();
  }
  const auto check = gaussian_moments(samples, VectorXd::Zero(3), MatrixXd(lam.asDiagonal()));
  CHECK(check.max_mean_z < 4.0);
  CHECK(check.max_cov_z < 4.0);
}

TEST_CASE("chol sampler: zero design, forced-zero noise, dense oracle") {
  Rng rng(17);
  {
    const int draws = 100000;
    MatrixXd samples(draws, 2);
    for (int i = 0; i < draws; ++i) {
      samples.row(i) = sample_gaussian_chol(MatrixXd::Zero(3, 2), VectorXd::Ones(3), rng).transpose();
    }
    const auto check = gaussian_moments(samples, VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    CHECK(check.max_mean_z < 4.0);
    CHECK(check.max_cov_z < 4.0);
  }
  MatrixXd xs(3, 2);
  xs << 1.0, 0.5, -0.3, 2.0, 0.8, -1.1;
  VectorXd y(3);
  y << 1.0, -2.0, 0.5;
  const auto [mean, cov] = dense_posterior(xs, VectorXd::Ones(2), y);
  const VectorXd forced = sample_gaussian_chol(xs, y, rng, Noise::kZero);
  CHECK((forced - mean).norm() <= 1e-10 * mean.norm());

  const int draws = 100000;
  MatrixXd samples(draws, 2);
  for (int i = 0; i < draws; ++i) samples.row(i) = sample_gaussian_chol(xs, y, rng).transpose();
  const auto check = gaussian_moments(samples, mean, cov);
  CHECK(check.max_mean_z < 4.0);
  CHECK(check.max_cov_z < 4.0);
}

TEST_CASE("sampler moment errors shrink like N^{-1/2}") {
  MatrixXd x(2, 3);
  x << 0.4, 1.0, -0.7, 1.3, -0.2, 0.6;
  VectorXd lam(3);
  lam << 2.0, 0.5, 1.0;
  VectorXd y(2);
  y << 1.0, 0.25;
  const auto [mean, cov] = dense_posterior(x, lam, y);
  const DenseMap op(x);
  const DiagonalScale scale(lam);

  auto run = [&](int draws, std::uint64_t seed, bool structured) {
    Rng rng(seed);
    MatrixXd samples(draws, 3);
    MatrixXd xs = x * lam.cwiseSqrt().asDiagonal();  // same posterior in whitened coordinates
    for (int i = 0; i < draws; ++i) {
      if (structured) {
        samples.row(i) = sample_structured_gaussian(op, scale, y, rng).transpose();
      } else {
        samples.row(i) = (lam.cwiseSqrt().asDiagonal() * sample_gaussian_chol(xs, y, rng)).transpose();
      }
    }
    return gaussian_moments(samples, mean, cov);
  };
  for (const bool structured : {true, false}) {
    const auto small = run(10000, 5, structured);
    const auto big = run(1000000, 6, structured);
    // sqrt(N) * deviation stays O(1) at both sizes.
    CHECK(small.mean_dev * std::sqrt(1e4) < 4.0 * std::sqrt(3.0));
    CHECK(big.mean_dev * std::sqrt(1e6) < 4.0 * std::sqrt(3.0));
    CHECK(big.cov_frob < small.cov_frob);
    CHECK(big.cov_frob * std::sqrt(1e6) < 4.0 * cov.norm() * std::sqrt(2.0 * 3.0));
  }
}
