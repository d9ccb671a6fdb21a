#include "bsml/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>
#include <spdlog/spdlog.h>

#include "bsml/error.hpp"

namespace bsml {
namespace {

constexpr double kRateFloor = 1e-12;
constexpr double kResidualFloor = 1e-12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Keep draws strictly inside (0, upper).
double clamp_open(double x, double upper) {
  if (!(x > 0.0)) x = std::numeric_limits<double>::min();
  if (!(x < upper)) x = std::nextafter(upper, 0.0);
  return x;
}

// log P(shape, z) for the regularized lower incomplete gamma by its power
// series; stable where P underflows.
double log_gamma_p_series(double shape, double z) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 100000; ++k) {
    term *= z / (shape + k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return shape * std::log(z) - z - std::lgamma(shape + 1.0) + std::log(sum);
}

}  // namespace

// ---------------------------------------------------------------------------
// B | rest

void step_B(ChainState& state, const Dataset& data, double alpha, Rng& rng, Noise noise) {
  const Index p = state.B.rows();
  const Index k = state.B.cols();
  const double root_alpha = std::sqrt(alpha);
  const MatrixXd whiten = state.noise.whitening();

  MatrixXd yt = whiten * data.Y.transpose();
  yt *= root_alpha;
  const KronRightIdentity design(data.X, root_alpha * (whiten * state.A));

  // Prior variances in vec(B^T) order: index j * k + h.
  VectorXd scale(p * k);
  constexpr double tiny = std::numeric_limits<double>::min();
  for (Index j = 0; j < p; ++j) {
    for (Index h = 0; h < k; ++h) {
      const double s = state.lambda(j, h) * state.tau[h];
      scale[j * k + h] = std::max(s * s, tiny);
    }
  }
  const VectorXd beta = sample_structured_gaussian(design, DiagonalScale(std::move(scale)),
                                                   Eigen::Map<const VectorXd>(yt.data(), yt.size()),
                                                   rng, noise);
  state.B = unvec(beta, k, p).transpose();
}

// ---------------------------------------------------------------------------
// A | rest

void step_A(ChainState& state, const Dataset& data, double alpha, Rng& rng, Noise noise) {
  const Index q = state.A.rows();
  const Index k = state.A.cols();
  const MatrixXd xb = data.X * state.B;
  const MatrixXd noise_precision = state.noise.precision();

  // X* = Sigma~^{-1/2}(XB kron I_q); X*^T y~ = (XB kron I_q)^T vec(Sigma^{-1} Y^T).
  const auto lifted = kron_identity_left(xb, q);
  const MatrixXd weighted_y = noise_precision * data.Y.transpose();
  const VectorXd rhs = alpha * lifted->adjoint(Eigen::Map<const VectorXd>(weighted_y.data(), weighted_y.size()));

  MatrixXd precision = alpha * kron(xb.transpose() * xb, noise_precision);
  precision.diagonal().array() += 1.0;
  const VectorXd a = sample_gaussian_precision(precision, rhs, rng, noise);
  state.A = unvec(a, q, k);
}

// ---------------------------------------------------------------------------
// noise | rest

MatrixXd sample_inverse_wishart(double df, const MatrixXd& scale, Rng& rng) {
  const Index q = scale.rows();
  if (scale.cols() != q) throw ContractError("inverse-Wishart scale must be square");
  if (!(df > static_cast<double>(q) - 1.0)) throw ContractError("inverse-Wishart df must exceed q - 1");

  // Sigma^{-1} ~ Wishart(df, scale^{-1}) = (L T)(L T)^T with scale^{-1} = L L^T.
  const auto scale_llt = spd_factor(scale, "inverse-Wishart scale");
  const MatrixXd scale_inv = scale_llt.solve(MatrixXd::Identity(q, q));
  const auto inv_llt = spd_factor(0.5 * (scale_inv + scale_inv.transpose()), "inverse-Wishart scale inverse");
  const MatrixXd lower = inv_llt.matrixL();

  MatrixXd bartlett = MatrixXd::Zero(q, q);
  for (Index i = 0; i < q; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  const MatrixXd factor = lower * bartlett;
  const MatrixXd factor_inv =
      factor.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(q, q));
  const MatrixXd sigma = factor_inv.transpose() * factor_inv;
  return 0.5 * (sigma + sigma.transpose());
}

NoiseState draw_noise(NoiseKind kind, double effective_n, const MatrixXd& crossprod, Rng& rng) {
  const Index q = crossprod.rows();
  if (kind == NoiseKind::kDiagonal) {
    VectorXd sigma2(q);
    for (Index h = 0; h < q; ++h) {
      double s = crossprod(h, h);
      if (!(s > kResidualFloor)) {
        spdlog::warn("residual sum of squares for response {} is {}; flooring at {}", h, s, kResidualFloor);
        s = kResidualFloor;
      }
      sigma2[h] = 1.0 / rng.gamma(0.5 * effective_n, 0.5 * s);
    }
    return NoiseState::diagonal(std::move(sigma2));
  }
  MatrixXd scale = crossprod;
  scale.diagonal().array() += 1.0;
  return NoiseState::full(sample_inverse_wishart(static_cast<double>(q) + effective_n, scale, rng));
}

void step_noise(ChainState& state, const Dataset& data, double alpha, Rng& rng) {
  const MatrixXd residual = data.Y - data.X * state.coefficients();
  MatrixXd crossprod = residual.transpose() * residual;
  crossprod *= alpha;
  state.noise = draw_noise(state.noise.kind, alpha * static_cast<double>(data.n()), crossprod, rng);
}

// ---------------------------------------------------------------------------
// scales

double truncated_exponential(double rate, double upper, Rng& rng) {
  const double u = rng.uniform();
  const double x = -std::log1p(u * std::expm1(-rate * upper)) / rate;
  return clamp_open(x, upper);
}

double truncated_gamma(double shape, double rate, double upper, Rng& rng) {
  const double z_upper = rate * upper;
  const double u = rng.uniform();
  const double mass = boost::math::gamma_p(shape, z_upper);
  if (mass > 1e-250) {
    const double z = boost::math::gamma_p_inv(shape, u * mass);
    return clamp_open(z / rate, upper);
  }
  // Far left tail: invert log P by bisection on z in (0, z_upper).
  const double target = std::log(u) + log_gamma_p_series(shape, z_upper);
  double lo = 0.0;
  double hi = z_upper;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0 || log_gamma_p_series(shape, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return clamp_open(0.5 * (lo + hi) / rate, upper);
}

SliceDraw slice_local_scale(double eta, double rate, Rng& rng) {
  const double u = rng.uniform(1.0 / (1.0 + eta));
  const double bound = (1.0 - u) / u;
  if (!(rate > 0.0)) rate = kRateFloor;
  return {truncated_exponential(rate, bound, rng), bound};
}

SliceDraw slice_global_scale(double eta, double shape, double rate, Rng& rng) {
  const double u = rng.uniform(1.0 / (1.0 + eta));
  const double bound = (1.0 - u) / u;
  if (!(rate > 0.0)) rate = kRateFloor;
  return {truncated_gamma(shape, rate, bound, rng), bound};
}

void step_scales(ChainState& state, Rng& rng) {
  const Index p = state.B.rows();
  const Index k = state.B.cols();
  for (Index h = 0; h < k; ++h) {
    const double tau2 = state.tau[h] * state.tau[h];
    for (Index j = 0; j < p; ++j) {
      const double b = state.B(j, h);
      const double lam = state.lambda(j, h);
      const SliceDraw draw = slice_local_scale(1.0 / (lam * lam), b * b / (2.0 * tau2), rng);
      state.lambda(j, h) = 1.0 / std::sqrt(draw.eta);
    }
  }
  const double shape = 0.5 * (static_cast<double>(p) + 1.0);
  for (Index h = 0; h < k; ++h) {
    const double rate = 0.5 * state.B.col(h).cwiseQuotient(state.lambda.col(h)).squaredNorm();
    const double tau = state.tau[h];
    const SliceDraw draw = slice_global_scale(1.0 / (tau * tau), shape, rate, rng);
    state.tau[h] = 1.0 / std::sqrt(draw.eta);
  }
}

// ---------------------------------------------------------------------------
// Driver

void gibbs_sweep(ChainState& state, const Dataset& data, const GibbsConfig& config, Rng& rng,
                 ChainDiagnostics* timing) {
  auto start = Clock::now();
  step_B(state, data, config.alpha, rng);
  if (timing) timing->seconds_B += seconds_since(start);

  if (config.update_A) {
    start = Clock::now();
    step_A(state, data, config.alpha, rng);
    if (timing) timing->seconds_A += seconds_since(start);
  }
  if (config.update_noise) {
    start = Clock::now();
    step_noise(state, data, config.alpha, rng);
    if (timing) timing->seconds_noise += seconds_since(start);
  }
  if (config.update_scales) {
    start = Clock::now();
    step_scales(state, rng);
    if (timing) timing->seconds_scales += seconds_since(start);
  }
}

ChainResult run_chain(const Dataset& data, const GibbsConfig& config, Rng& rng,
                      std::optional<ChainState> initial) {
  data.validate();
  config.validate(data.q());
  const Index k = config.effective_rank_bound(data.q());
  const NoiseKind kind =
      config.noise_model == NoiseModel::kDiagonal ? NoiseKind::kDiagonal : NoiseKind::kFull;

  ChainResult result;
  ChainState state = initial ? std::move(*initial) : ChainState::initial(data, k, kind);
  state.validate();
  if (state.B.rows() != data.p() || state.A.rows() != data.q()) {
    throw ContractError("initial state does not match the dataset");
  }

  // Reservoir replacement uses its own stream so the chain never depends on it.
  Rng reservoir_rng = rng.split(0x5eedULL);
  std::vector<MatrixXd> reservoir;
  MatrixXd sum = MatrixXd::Zero(data.p(), data.q());
  std::size_t kept = 0;

  auto& diag = result.diagnostics;
  diag.loglik_trace.reserve(config.iterations);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    try {
      gibbs_sweep(state, data, config, rng, &diag);
      diag.loglik_trace.push_back(loglik(state, data, config.alpha));
    } catch (const ChainError&) {
      throw;
    } catch (const NumericalError& e) {
      throw ChainError(it, e);
    }

    if (it <= config.burn_in || (it - config.burn_in) % config.thin != 0) continue;
    const MatrixXd c = state.coefficients();
    sum += c;
    if (config.interval_reservoir > 0) {
      if (kept < config.interval_reservoir) {
        reservoir.push_back(c);
      } else {
        const auto slot = reservoir_rng.below_or_equal(kept);
        if (slot < config.interval_reservoir) reservoir[slot] = c;
      }
    }
    if (config.store_draws) result.summary.draws.push_back(c);
    ++kept;
  }

  auto& summary = result.summary;
  summary.kept = kept;
  summary.credible_level = config.credible_level;
  summary.C_mean = kept > 0 ? MatrixXd(sum / static_cast<double>(kept)) : sum;
  if (!reservoir.empty()) {
    std::tie(summary.C_lo, summary.C_hi) = credible_bounds(reservoir, config.credible_level);
  }
  result.final_state = std::move(state);
  return result;
}

ChainResult run_chain(const Dataset& data, const GibbsConfig& config) {
  Rng rng(config.seed);
  return run_chain(data, config, rng);
}

}  // namespace bsml
