#include "bsml/random.hpp"

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace bsml {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed + kGolden) ^ mix64(index * kGolden + 0x632be59bd9b4e019ULL));
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : key_(derive_seed(seed, stream)) {}

Rng::result_type Rng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

Rng Rng::split(std::uint64_t index) const { return Rng(key_, index + 1); }

double Rng::uniform() {
  // 53 random mantissa bits, offset by half an ulp so 0 is never returned.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  boost::random::normal_distribution<double> dist;
  return dist(*this);
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index size) {
  Eigen::VectorXd out(size);
  boost::random::normal_distribution<double> dist;
  for (Eigen::Index i = 0; i < size; ++i) out[i] = dist(*this);
  return out;
}

double Rng::gamma(double shape, double rate) {
  boost::random::gamma_distribution<double> dist(shape, 1.0);
  return dist(*this) / rate;
}

double Rng::chi_squared(double df) {
  boost::random::chi_squared_distribution<double> dist(df);
  return dist(*this);
}

std::uint64_t Rng::below_or_equal(std::uint64_t bound) {
  boost::random::uniform_int_distribution<std::uint64_t> dist(0, bound);
  return dist(*this);
}

}  // namespace bsml
