#pragma once

#include "lapcert/metrics.hpp"
#include "lapcert/potential.hpp"
#include "lapcert/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace lapcert {

enum class LinkKind { logistic, poisson, gaussian, exponential, custom };

/// Scalar exponential-family log-partition psi on Omega with its first three derivatives.
struct LinkFamily {
  LinkKind kind = LinkKind::custom;
  std::string name;
  std::function<double(double)> psi, d1, d2, d3;
  std::function<bool(double)> in_omega;
  /// sup of |psi'''| over [a, b]; empty for custom links without one.
  std::function<double(double, double)> max_abs_d3;
  /// Base measure has a log-concave density.
  bool log_concave_base = false;
};

LinkFamily make_link(LinkKind kind);
/// "logistic" | "poisson" | "gaussian" | "exponential".
LinkFamily make_link(std::string_view name);
/// Caller supplies psi and derivatives and Omega membership. No sampler exists for these.
LinkFamily make_custom_link(std::string name, std::function<double(double)> psi,
                            std::function<double(double)> d1, std::function<double(double)> d2,
                            std::function<double(double)> d3, std::function<bool(double)> in_omega,
                            std::function<double(double, double)> max_abs_d3 = {});

/// sup_t |psi'''(t)| for the logistic link, 1/(6 sqrt 3).
double logistic_d3_sup();

/// Rows x_r with weights w_r; the likelihood normalizer n equals sum of weights.
/// The identity design stores d unit rows each carrying weight n, and its labels are
/// coordinate means.
struct Design {
  Mat X;
  Vec weights;
  double n = 0.0;
  bool identity = false;
};

/// n rows with i.i.d. N(0, I_d) entries.
Design gaussian_design(int n, int d, std::uint64_t seed);
/// `support` N(0, I_d) rows, each repeated `replicates` times (stored once with that weight).
Design gaussian_support_design(int support, int d, long long replicates, std::uint64_t seed);
Design identity_design(int d, double n);
Design explicit_design(const Mat& X);

/// One label statistic per design row, drawn at omega_r = x_r^T theta*.
Vec glm_sample(const LinkFamily& link, const Design& design, const Vec& theta_star, std::uint64_t seed);

/// Upper and lower values for sup_{|w|=1} sum_r coef_r |z_r^T w|^3.
struct CubicSup {
  double lower = 0.0;   // attained at `witness`
  double upper = 0.0;   // certified
  Vec witness;
  bool refined = false;  // branch and bound reached the requested tolerance
};
/// Rows of Z are z_r; coefficients must be nonnegative. d <= 3 uses branch and bound on
/// the sphere; larger d falls back to max_r |z_r| * lambda_max(sum coef z z^T).
CubicSup sup_abs_cubic_sum(const Mat& Z, const Vec& coef, double rel_tol = 1e-3, int max_cells = 4000);

/// Normalized negative log-likelihood of a scalar-link GLM.
class GlmModel {
 public:
  GlmModel(LinkFamily link, Design design, Vec theta_star, Vec labels);

  int dim() const { return static_cast<int>(design_.X.cols()); }
  double n() const { return design_.n; }
  const LinkFamily& link() const { return link_; }
  const Design& design() const { return design_; }
  const Vec& theta_star() const { return theta_star_; }
  const Vec& labels() const { return labels_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  GlmModel with_labels(Vec labels) const;

  bool in_domain(const Vec& theta) const;
  NllEval eval(const Vec& theta) const;
  double value(const Vec& theta) const;
  Vec gradient(const Vec& theta) const;
  /// Depends only on the design and theta, never on the labels.
  Mat hessian(const Vec& theta) const;
  double third_directional(const Vec& theta, const Vec& u) const;
  Vec third_contract(const Vec& theta, const Vec& u) const;

  /// Hessian at theta*, and whether it is numerically singular.
  Mat fisher() const;
  bool fisher_singular() const;

  bool contains_ellipsoid(const Vec& center, const Mat& L, double radius) const;

  /// Certified bound on sup over {|theta - center|_A <= radius} of ||D^3 l(theta)||_A.
  CubicSup third_norm_bound(const Vec& center, const MetricContext& A, double radius) const;

  /// The potential f = l with scale n.
  TargetPotential potential() const;

 private:
  Vec eta(const Vec& theta) const;
  LinkFamily link_;
  Design design_;
  Vec theta_star_;
  Vec labels_;
  Vec b_;  // (1/n) sum w_r y_r x_r
  std::vector<std::string> warnings_;
};

NllEval glm_nll(const GlmModel& model, const Vec& theta);
Mat glm_fisher(const GlmModel& model);

}  // namespace lapcert
