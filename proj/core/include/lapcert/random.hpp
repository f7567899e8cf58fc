#pragma once

#include "lapcert/types.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

namespace lapcert {

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream index (splitmix64 finalizer). Replications and
/// sub-computations draw from disjoint streams derived this way.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

Vec standard_normal(Rng& rng, int dim);
/// Uniform on the Euclidean unit sphere S^{dim-1}.
Vec uniform_sphere(Rng& rng, int dim);
/// Uniform in the Euclidean unit ball.
Vec uniform_ball(Rng& rng, int dim);

/// Randomly shifted (Cranley-Patterson) Sobol points mapped into the unit ball.
/// The radial coordinate uses u^{1/dim}, so points are volume-uniform.
class ScrambledBallSequence {
 public:
  ScrambledBallSequence(int dim, std::uint64_t seed);
  Vec next();

 private:
  int dim_;
  std::vector<double> shift_;
  std::vector<double> buffer_;
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace lapcert
