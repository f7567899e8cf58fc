#pragma once

#include "lapcert/potential.hpp"
#include "lapcert/types.hpp"

#include <cstdint>
#include <string>

namespace lapcert {

/// Multivariate normal N(mean, cov).
struct Gaussian {
  Vec mean;
  Mat cov;

  static Gaussian from_precision(const Vec& mean, const Mat& precision);
  int dim() const { return static_cast<int>(mean.size()); }
  /// Symmetric square root of cov.
  Mat sqrt_cov() const;
  double log_density(const Vec& x) const;
};

enum class TvMethod { quadrature, mc };
std::string to_string(TvMethod m);

struct TvEstimate {
  double value = 0.0;
  TvMethod method = TvMethod::quadrature;
  /// quadrature: grid + truncation + rounding bound; mc: jackknife standard error
  double error = 0.0;
  double grid_error = 0.0;
  double truncation_error = 0.0;
  double rounding_error = 0.0;  // floating-point bound for the integrand near p == q
  long long size = 0;  // grid points or samples
  double ess = 0.0;    // mc only
  bool reliable = true;
};

struct QuadratureOptions {
  /// Box half-width in standard deviations of g is radius_mult * sqrt(d).
  double radius_mult = 12.0;
  /// Points per axis (odd, adjusted to 1 mod 4); 0 picks 4001 / 401 / 101 for d = 1 / 2 / 3.
  int grid = 0;
};

/// (1/2) int |pi_f - g| by tensor-product Simpson in g-whitened coordinates; d <= 3.
TvEstimate tv_quadrature(const TargetPotential& f, const Gaussian& g, const QuadratureOptions& opts = {});

struct McOptions {
  long long samples = 100000;
  std::uint64_t seed = 0x7f4a;
  int blocks = 50;
  double min_ess = 100.0;
};

/// Importance sampling with g as proposal; standard error from a blocked jackknife.
TvEstimate tv_mc(const TargetPotential& f, const Gaussian& g, const McOptions& opts = {});

/// min(1, 2 (eps / tau) sqrt(d)) for N(m, Sigma_1) vs N(m, Sigma_2), given the two precisions.
double tv_gaussian_bound(const Mat& prec1, const Mat& prec2);

/// 2 ||Sigma_1^{-1/2} Sigma_2 Sigma_1^{-1/2} - I||_F, an upper bound on TV for equal means.
double tv_gaussian_frobenius_bound(const Mat& cov1, const Mat& cov2);

/// Exact TV between N(mu1, sigma1^2) and N(mu2, sigma2^2).
double tv_gaussian_exact_1d(double mu1, double sigma1, double mu2, double sigma2);

}  // namespace lapcert
