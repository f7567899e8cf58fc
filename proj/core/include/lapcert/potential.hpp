#pragma once

#include "lapcert/metrics.hpp"
#include "lapcert/types.hpp"

#include <functional>
#include <optional>
#include <string>

namespace lapcert {

/// A potential f on a convex domain, defining the density pi_f proportional to exp(-n f).
struct TargetPotential {
  std::string name;
  int dim = 0;
  double n = 1.0;
  bool convex = false;

  std::function<bool(const Vec&)> in_domain;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;

  /// <D^3 f(theta), u^3>; optional.
  std::function<double(const Vec&, const Vec&)> third_directional;
  /// D^3 f(theta)[u, u, .]; optional, used as the gradient of the directional form.
  std::function<Vec(const Vec&, const Vec&)> third_contract;

  /// Analytic delta_3(r) in the H-geometry at the mode; optional.
  std::function<double(double)> delta3_analytic;

  /// Certified upper bound on sup over {|theta - mode|_H <= radius} of ||D^3 f||_H. Optional.
  std::function<double(const Vec& mode, const MetricContext& H, double radius)> delta3_certified;

  /// Exact test of {center + L z : |z| <= radius} being inside the domain. When empty the
  /// domain is treated as R^d if in_domain is empty, else checked by boundary sampling.
  std::function<bool(const Vec& center, const Mat& L, double radius)> contains_ellipsoid;

  bool has_third() const { return static_cast<bool>(third_directional); }
  bool inside(const Vec& theta) const { return !in_domain || in_domain(theta); }
};

/// Value, gradient and Hessian at one point.
struct NllEval {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

/// Throws DimensionError/DomainError when theta is unusable.
void check_point(const TargetPotential& f, const Vec& theta, const char* where);

/// Whether the ellipsoid {center + L z : |z| <= radius} lies inside the domain. Returns
/// {inside, exact}; exact is false when only boundary sampling was possible.
std::pair<bool, bool> ellipsoid_in_domain(const TargetPotential& f, const Vec& center, const Mat& L,
                                          double radius, std::uint64_t seed = 17);

/// The third derivative at theta as a callable symmetric 3-form (requires third_directional).
SymmetricKForm third_derivative_form(const TargetPotential& f, const Vec& theta);

/// f(theta) = |theta|^2/2 + |theta|^3/6 on R^d.
TargetPotential make_cubic_radial(int d, double n);
/// f(theta) = |theta|^2/2 + |1^T theta|^3/6 on R^d.
TargetPotential make_ones_cubic(int d, double n);
/// f(theta) = (theta - a)^T Q (theta - a) / 2 on R^d.
TargetPotential make_quadratic(const Mat& Q, const Vec& a, double n);

/// g(phi) = f(T^{-1}(phi - b)): the pushforward of pi_f under phi = T theta + b.
TargetPotential affine_pushforward(const TargetPotential& f, const Mat& T, const Vec& b);

/// Numerical checks used by tests and the CLI sanity path.
struct DerivativeCheck {
  double grad_rel_err = 0.0;
  double hess_rel_err = 0.0;
  double third_rel_err = 0.0;
  double hess_asymmetry = 0.0;
  double min_hess_eig = 0.0;
};
DerivativeCheck check_derivatives(const TargetPotential& f, const Vec& theta, const Vec& direction);

}  // namespace lapcert
