#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace bsml {

/// Counter-based 64-bit generator (SplitMix64 output function over a keyed
/// counter). Streams are split deterministically, so replicate and chain
/// seeds never depend on scheduling order.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Independent child stream; `split(i)` is a pure function of (key, i).
  Rng split(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Uniform on the open interval (0, upper).
  double uniform(double upper) { return upper * uniform(); }
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index size);
  /// Gamma with the given shape and rate (mean shape / rate).
  double gamma(double shape, double rate);
  double chi_squared(double df);
  /// Integer uniform on [0, bound].
  std::uint64_t below_or_equal(std::uint64_t bound);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Mix a base seed with an index into a decorrelated derived seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Lets tests force the injected Gaussian noise of a sampler to zero.
enum class Noise { kSample, kZero };

}  // namespace bsml
