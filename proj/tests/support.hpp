#pragma once

// Independent oracles shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace bsml::testing {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct MomentCheck {
  double max_mean_z = 0.0;  // largest |mean error| / SE
  double max_cov_z = 0.0;   // largest |cov error| / SE
  double mean_dev = 0.0;    // || Sigma^{-1/2} (mean_hat - mean) ||
  double cov_frob = 0.0;    // || cov_hat - cov ||_F
};

/// Compares draws (rows) against a Gaussian's mean and covariance. SEs are
/// the Gaussian sampling SEs of the sample mean and sample covariance.
inline MomentCheck gaussian_moments(const MatrixXd& draws, const VectorXd& mean, const MatrixXd& cov) {
  const double n = static_cast<double>(draws.rows());
  const VectorXd m = draws.colwise().mean().transpose();
  const MatrixXd centered = draws.rowwise() - m.transpose();
  const MatrixXd c = centered.transpose() * centered / (n - 1.0);

  MomentCheck out;
  for (Index i = 0; i < mean.size(); ++i) {
    out.max_mean_z = std::max(out.max_mean_z, std::abs(m[i] - mean[i]) / std::sqrt(cov(i, i) / n));
    for (Index j = 0; j <= i; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
      out.max_cov_z = std::max(out.max_cov_z, std::abs(c(i, j) - cov(i, j)) / se);
    }
  }
  const Eigen::LLT<MatrixXd> llt(cov);
  out.mean_dev = llt.matrixL().solve(m - mean).norm();
  out.cov_frob = (c - cov).norm();
  return out;
}

/// Mean and batch-means standard error of an autocorrelated series.
struct SeriesSummary {
  double mean = 0.0;
  double se = 0.0;
};

inline SeriesSummary batch_means(const std::vector<double>& x, std::size_t batches = 100) {
  SeriesSummary out;
  const std::size_t per = x.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < per; ++i) means[b] += x[b * per + i];
    means[b] /= static_cast<double>(per);
  }
  for (const double m : means) out.mean += m;
  out.mean /= static_cast<double>(batches);
  double ss = 0.0;
  for (const double m : means) ss += (m - out.mean) * (m - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
  return out;
}

/// Adaptive Simpson quadrature on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                      int depth = 50) {
  const std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid);
    const double rm = 0.5 * (mid + hi);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return rec(lo, mid, flo, flm, fmid, left, d - 1) + rec(mid, hi, fmid, frm, fhi, right, d - 1);
  };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
}

/// Kolmogorov-Smirnov distance between a sample and a CDF.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

/// Tabulated CDF of an unnormalized density on [0, upper] (mass beyond
/// `upper` folded into the tail), by piecewise quadrature on a log grid.
class QuadratureCdf {
 public:
  QuadratureCdf(const std::function<double(double)>& density, double lower, double upper, int cells = 4000) {
    grid_.push_back(0.0);
    cumulative_.push_back(0.0);
    const double log_lo = std::log(lower);
    const double log_hi = std::log(upper);
    double prev = 0.0;
    double total = simpson(density, 0.0, lower, 1e-14);
    grid_.push_back(lower);
    cumulative_.push_back(total);
    prev = lower;
    for (int i = 1; i <= cells; ++i) {
      const double x = std::exp(log_lo + (log_hi - log_lo) * i / cells);
      total += simpson(density, prev, x, 1e-14);
      grid_.push_back(x);
      cumulative_.push_back(total);
      prev = x;
    }
    total_ = total;
  }

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= grid_.back()) return 1.0;
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
    const double w = (x - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
    return ((1.0 - w) * cumulative_[i - 1] + w * cumulative_[i]) / total_;
  }

 private:
  std::vector<double> grid_;
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

}  // namespace bsml::testing
