#pragma once

#include "lapcert/glm.hpp"
#include "lapcert/laplace.hpp"
#include "lapcert/pmf.hpp"
#include "lapcert/prior.hpp"
#include "lapcert/tv.hpp"
#include "lapcert/types.hpp"

#include <cstdint>
#include <functional>

namespace lapcert {

/// Newton on l from `start`; throws ConvergenceError when the minimizer is not attained.
LaplaceFit compute_mle(const GlmModel& model, const Vec& start, const NewtonOptions& opts = {});
/// The empirical frequencies, copied exactly; DomainError if a count is zero.
LaplaceFit compute_mle(const PmfModel& model);

/// Radius s sqrt(d/n) of U*(s).
double ustar_radius(double s, int d, double n);

struct EventReport {
  std::uint64_t replication = 0;
  std::uint64_t seed = 0;
  double s = 0.0;
  double grad_norm = 0.0;   // ||grad l(theta*)||_{F*}
  double hess_dev = 0.0;    // ||D^2 l(theta*) - F*||_{F*}
  double lipschitz = 0.0;   // sampled sup of the pairwise ratio over U*(2s), an estimate
  int pairs = 0;
  double threshold1 = 0.0;  // s sqrt(d/n)
  double eps2 = 0.0;
  double delta3_2s = 0.0;
  bool E1 = false, E2 = false, E3 = false;
  bool has_E0 = false;  // pmf only
  bool E0 = true;
  double chi2 = 0.0;  // pmf only
  bool all() const { return E1 && E2 && E3; }
};

/// Generic event check; `ell` is the realized normalized negative log-likelihood.
EventReport check_events(const TargetPotential& ell, const Mat& Fstar, const Vec& theta_star, double s, double eps2,
                         double delta3_2s, int pair_budget, std::uint64_t seed);
/// eps2 = 0 and delta3*(2s) from the certified GLM bound.
EventReport check_events(const GlmModel& model, double s, int pair_budget, std::uint64_t seed);
/// eps2 = sqrt(s^2 d / (n theta*_min)); delta3*(2s) from the certified pmf bound (infinite when
/// its containment precondition fails); also evaluates E0.
EventReport check_events(const PmfModel& model, double s, int pair_budget, std::uint64_t seed);

struct Delta3StarGlm {
  double empirical = 0.0;        // multistart estimate of sup ||D^3 l||_{F*} over U*(s)
  double interval_bound = 0.0;   // certified, from |psi'''| maxima on each row's range
  double logistic_bound = -1.0;  // ||psi'''||_inf lambda^{-3/2} sup_u (1/n) sum |x^T u|^3; logistic only
  double lambda_min = 0.0;       // lambda_min(F*)
  double certified = 0.0;        // smallest available certified value
};
/// budget <= 0 skips the empirical search.
Delta3StarGlm delta3_star_glm(const GlmModel& model, double s, int budget, std::uint64_t seed = 0xd3);

struct Delta3StarPmf {
  double certified = 0.0;     // 16 max_j nbar_j / (theta*_j)^{3/2}
  double closed_form = 0.0;   // ||D^3 l(theta*)||_{F*} with nbar = theta*
};
/// Throws DomainError unless (2s)^2 d / n <= theta*_min / 4.
Delta3StarPmf delta3_star_pmf(const PmfModel& model, double s);
bool pmf_containment_holds(const PmfModel& model, double s);

/// sup over U*(s) of ||F(theta*)^{-1/2} F(theta) F(theta*)^{-1/2}|| by sampling and ascent.
double delta2_star(const std::function<Mat(const Vec&)>& F, const std::function<bool(const Vec&)>& in_domain,
                   const Vec& theta_star, double n, double s, int budget, std::uint64_t seed = 0xd2);
double delta2_star(const GlmModel& model, double s, int budget, std::uint64_t seed = 0xd2);
double delta2_star(const PmfModel& model, double s, int budget, std::uint64_t seed = 0xd2);

struct BvmContext {
  int d = 1;
  double n = 1.0;
  double s = 12.0;
  double eps2 = 0.0;
  double delta3_s = 0.0;   // delta3*(s)
  double delta3_2s = 0.0;  // delta3*(2s)
  PriorQuantities prior;   // M0*, delta01*(2s)
  bool neighborhood_in_domain = true;  // U*(2s) inside Theta
};

struct BvmBound {
  // (i) TV(pi_l, gamma_l)
  double laplace_local = 0.0;  // 8 delta3*(2s) d / sqrt(2n)
  double laplace_tail = 0.0;   // 3 exp(-d s^2 / 36)
  // (ii) TV(pi_v, pi_l)
  double prior_local = 0.0;    // delta01*(2s) / sqrt(n)
  double prior_tail = 0.0;     // 4 exp(d (M0* - s^2/144))
  // (iii) TV(gamma_l, gamma*)
  double gauss = 0.0;          // 8 sqrt(d) (s delta3*(s) sqrt(d/n) + eps2)
  double total = 1.0;

  bool s_at_least_12 = false;
  bool neighborhood_in_domain = false;
  bool delta3_condition = false;  // 2s delta3*(2s) sqrt(d/n) <= 1/4
  bool eps2_condition = false;    // eps2 <= 1/2
  bool delta01_condition = false; // delta01*(2s) <= sqrt(n d)/6
  // log-concave variant only
  bool delta2_condition = true;   // delta2*(2s) <= 3/2
  bool radius_condition = true;   // s sqrt(d/n) <= 1/(16 C23)

  double laplace() const { return laplace_local + laplace_tail; }
  double prior() const { return prior_local + prior_tail; }
  bool valid() const {
    return s_at_least_12 && neighborhood_in_domain && delta3_condition && eps2_condition && delta01_condition &&
           delta2_condition && radius_condition;
  }
};

BvmBound bvm_bound(const BvmContext& ctx);
/// delta3* replaced by the cap 2 C23; C23 has no default.
BvmBound bvm_bound_logconcave(const BvmContext& ctx, double C23, double delta2_2s);

/// gamma* = N(theta_hat, (n F*)^{-1})
Gaussian bvm_gaussian_target(const Vec& theta_hat, const Mat& Fstar, double n);
/// gamma_l = N(theta_hat, (n D^2 l(theta_hat))^{-1})
Gaussian laplace_gaussian(const LaplaceFit& fit);

}  // namespace lapcert
