#include "lapcert/random.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

namespace lapcert {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  // FNV-1a over the tag
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed, h);
}

Vec standard_normal(Rng& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(dim);
  for (int i = 0; i < dim; ++i) z[i] = normal(rng);
  return z;
}

Vec uniform_sphere(Rng& rng, int dim) {
  Vec z;
  double norm = 0.0;
  do {
    z = standard_normal(rng, dim);
    norm = z.norm();
  } while (norm < 1e-300);
  return z / norm;
}

Vec uniform_ball(Rng& rng, int dim) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double radius = std::pow(unif(rng), 1.0 / dim);
  return radius * uniform_sphere(rng, dim);
}

struct ScrambledBallSequence::Impl {
  explicit Impl(unsigned dims) : engine(dims) {}
  boost::random::sobol engine;
};

ScrambledBallSequence::ScrambledBallSequence(int dim, std::uint64_t seed)
    : dim_(dim), shift_(dim + 1), buffer_(dim + 1), impl_(std::make_shared<Impl>(dim + 1)) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& s : shift_) s = unif(rng);
  // skip the origin of the Sobol sequence
  impl_->engine.discard(dim + 1);
}

Vec ScrambledBallSequence::next() {
  const double scale = 1.0 / (static_cast<double>(boost::random::sobol::max()) + 1.0);
  for (int j = 0; j <= dim_; ++j) {
    double u = static_cast<double>(impl_->engine()) * scale + shift_[j];
    u -= std::floor(u);
    buffer_[j] = std::clamp(u, 1e-12, 1.0 - 1e-12);
  }
  Vec z(dim_);
  for (int j = 0; j < dim_; ++j) z[j] = normal_quantile(buffer_[j]);
  const double norm = z.norm();
  if (norm < 1e-300) {
    z.setZero();
    z[0] = 1.0;
  } else {
    z /= norm;
  }
  return std::pow(buffer_[dim_], 1.0 / dim_) * z;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

}  // namespace lapcert
