#pragma once

#include "lapcert/potential.hpp"
#include "lapcert/types.hpp"

namespace lapcert {

enum class PriorKind { flat, gaussian, student_t };

/// Prior density w on the parameter space, with rho = -log w (up to a constant).
class PriorSpec {
 public:
  static PriorSpec flat(int d);
  static PriorSpec gaussian(const Vec& mu, const Mat& Sigma);
  static PriorSpec student_t(double nu, const Vec& mu, const Mat& Sigma);

  PriorKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vec& mu() const { return mu_; }
  const Mat& sigma() const { return sigma_; }
  const Mat& precision() const { return precision_; }
  double nu() const { return nu_; }

  double rho(const Vec& theta) const;
  /// grad log w = -grad rho
  Vec grad_log_density(const Vec& theta) const;
  Vec grad_rho(const Vec& theta) const;
  Mat hess_rho(const Vec& theta) const;
  double third_rho(const Vec& theta, const Vec& u) const;
  Vec third_rho_contract(const Vec& theta, const Vec& u) const;

 private:
  PriorKind kind_ = PriorKind::flat;
  int dim_ = 0;
  Vec mu_;
  Mat sigma_, precision_;
  double nu_ = 0.0;
};

struct PriorQuantities {
  double M0 = 0.0;       // M_0^*
  double delta01 = 0.0;  // delta_01^*(s)
};

/// Closed-form bounds on M_0^* and delta_01^*(s) in the F*-geometry. With numeric=true
/// M_0^* uses the exact log-ratio over R^d and delta_01^*(s) is maximized over U*(s)
/// by multistart ascent (an estimate, not a bound).
PriorQuantities prior_quantities(const PriorSpec& prior, const Mat& Fstar, const Vec& theta_star, double s,
                                 double n, bool numeric = false);

/// v = l + rho / n for a likelihood potential l.
TargetPotential make_posterior(const TargetPotential& nll, const PriorSpec& prior);

}  // namespace lapcert
