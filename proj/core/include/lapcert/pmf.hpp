#pragma once

#include "lapcert/potential.hpp"
#include "lapcert/types.hpp"

#include <cstdint>
#include <vector>

namespace lapcert {

/// Multinomial model on d+1 states with free parameters theta_1..theta_d and
/// theta_0 = 1 - sum(theta). Index 0 of counts and theta_star is the reference state.
class PmfModel {
 public:
  PmfModel(std::vector<long long> counts, Vec theta_star_full);

  int dim() const { return static_cast<int>(theta_star_.size()) - 1; }
  double n() const { return n_; }
  const std::vector<long long>& counts() const { return counts_; }
  /// Empirical frequencies N/n, length d+1.
  const Vec& nbar_full() const { return nbar_; }
  /// Ground truth, length d+1.
  const Vec& theta_star_full() const { return theta_star_; }
  /// Free coordinates (drop index 0).
  Vec theta_star() const { return theta_star_.tail(dim()); }
  Vec nbar() const { return nbar_.tail(dim()); }
  double theta_min() const { return theta_star_.minCoeff(); }
  /// Some count is zero, so the MLE sits on the boundary of the simplex.
  bool mle_on_boundary() const;

  bool in_domain(const Vec& theta) const;
  double value(const Vec& theta) const;
  Vec gradient(const Vec& theta) const;
  Mat hessian(const Vec& theta) const;
  double third_directional(const Vec& theta, const Vec& u) const;
  Vec third_contract(const Vec& theta, const Vec& u) const;

  Mat fisher() const;
  bool contains_ellipsoid(const Vec& center, const Mat& L, double radius) const;

  /// Certified sup of ||D^3 l||_H over {|theta - nbar|_H <= radius} with H = D^2 l(nbar).
  double delta3_h_bound(double radius) const;

  TargetPotential potential() const;

  PmfModel with_counts(std::vector<long long> counts) const;

 private:
  std::vector<long long> counts_;
  Vec theta_star_;
  Vec nbar_;
  double n_ = 0.0;
};

/// Expand free coordinates to the full pmf (theta_0 first).
Vec pmf_full(const Vec& theta_free);
double chi_square(const Vec& omega_full, const Vec& theta_full);

NllEval pmf_nll(const PmfModel& model, const Vec& theta);
Mat pmf_fisher(const PmfModel& model);
/// diag(1/theta_j) + (1/theta_0) 1 1^T from a full pmf.
Mat pmf_fisher_at(const Vec& theta_full);

std::vector<long long> pmf_sample(const Vec& theta_star_full, long long n, std::uint64_t seed);

/// Closed form ||D^3 l(theta*)||_{F*} when nbar equals theta*.
double pmf_tensor_norm_closed_form(double theta_min);

}  // namespace lapcert
