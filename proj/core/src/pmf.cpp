#include "lapcert/pmf.hpp"

#include "lapcert/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace lapcert {

Vec pmf_full(const Vec& theta_free) {
  Vec full(theta_free.size() + 1);
  full[0] = 1.0 - theta_free.sum();
  full.tail(theta_free.size()) = theta_free;
  return full;
}

double chi_square(const Vec& omega_full, const Vec& theta_full) {
  require_dim(omega_full.size(), theta_full.size(), "chi_square");
  return ((omega_full - theta_full).array().square() / theta_full.array()).sum();
}

Mat pmf_fisher_at(const Vec& theta_full) {
  if ((theta_full.array() <= 0.0).any()) throw DomainError("pmf_fisher: probabilities must be positive");
  const int d = static_cast<int>(theta_full.size()) - 1;
  if (d < 1) throw DimensionError("pmf_fisher: need at least two states");
  Mat F = Mat::Constant(d, d, 1.0 / theta_full[0]);
  F.diagonal() += theta_full.tail(d).cwiseInverse();
  return F;
}

double pmf_tensor_norm_closed_form(double theta_min) {
  if (!(theta_min > 0.0) || theta_min > 0.5) throw std::invalid_argument("pmf_tensor_norm_closed_form: theta_min in (0, 1/2]");
  return 2.0 * (1.0 - 2.0 * theta_min) / std::sqrt(theta_min * (1.0 - theta_min));
}

PmfModel::PmfModel(std::vector<long long> counts, Vec theta_star_full)
    : counts_(std::move(counts)), theta_star_(std::move(theta_star_full)) {
  if (theta_star_.size() < 2) throw DimensionError("PmfModel: need at least two states");
  require_dim(static_cast<Eigen::Index>(counts_.size()), theta_star_.size(), "PmfModel counts");
  if ((theta_star_.array() <= 0.0).any()) throw DomainError("PmfModel: theta* must be strictly positive");
  if (std::abs(theta_star_.sum() - 1.0) > 1e-12) throw DomainError("PmfModel: theta* must sum to 1");
  long long total = 0;
  for (long long c : counts_) {
    if (c < 0) throw std::invalid_argument("PmfModel: negative count");
    total += c;
  }
  if (total <= 0) throw std::invalid_argument("PmfModel: counts must sum to a positive n");
  n_ = static_cast<double>(total);
  nbar_.resize(theta_star_.size());
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    nbar_[static_cast<Eigen::Index>(j)] = static_cast<double>(counts_[j]) / n_;
  }
}

PmfModel PmfModel::with_counts(std::vector<long long> counts) const {
  return PmfModel(std::move(counts), theta_star_);
}

bool PmfModel::mle_on_boundary() const {
  for (long long c : counts_)
    if (c == 0) return true;
  return false;
}

bool PmfModel::in_domain(const Vec& theta) const {
  if (theta.size() != dim() || !theta.allFinite()) return false;
  return (theta.array() > 0.0).all() && theta.sum() < 1.0;
}

namespace {

void require_inside(const PmfModel& m, const Vec& theta) {
  require_dim(theta.size(), m.dim(), "PmfModel");
  if (!m.in_domain(theta)) throw DomainError("PmfModel: theta outside the open simplex");
}

}  // namespace

double PmfModel::value(const Vec& theta) const {
  require_inside(*this, theta);
  const Vec full = pmf_full(theta);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < full.size(); ++j) {
    if (nbar_[j] > 0.0) acc -= nbar_[j] * std::log(full[j]);
  }
  return acc;
}

Vec PmfModel::gradient(const Vec& theta) const {
  require_inside(*this, theta);
  const double t0 = 1.0 - theta.sum();
  const int d = dim();
  Vec g(d);
  for (int j = 0; j < d; ++j) g[j] = -nbar_[j + 1] / theta[j] + nbar_[0] / t0;
  return g;
}

Mat PmfModel::hessian(const Vec& theta) const {
  require_inside(*this, theta);
  const double t0 = 1.0 - theta.sum();
  const int d = dim();
  Mat H = Mat::Constant(d, d, nbar_[0] / (t0 * t0));
  for (int j = 0; j < d; ++j) H(j, j) += nbar_[j + 1] / (theta[j] * theta[j]);
  return H;
}

double PmfModel::third_directional(const Vec& theta, const Vec& u) const {
  require_inside(*this, theta);
  require_dim(u.size(), dim(), "PmfModel::third_directional");
  const double t0 = 1.0 - theta.sum();
  const double s = u.sum();
  double acc = 2.0 * nbar_[0] * s * s * s / (t0 * t0 * t0);
  for (int j = 0; j < dim(); ++j) acc -= 2.0 * nbar_[j + 1] * std::pow(u[j] / theta[j], 3);
  return acc;
}

Vec PmfModel::third_contract(const Vec& theta, const Vec& u) const {
  require_inside(*this, theta);
  require_dim(u.size(), dim(), "PmfModel::third_contract");
  const double t0 = 1.0 - theta.sum();
  const double s = u.sum();
  Vec c = Vec::Constant(dim(), 2.0 * nbar_[0] * s * s / (t0 * t0 * t0));
  for (int j = 0; j < dim(); ++j) c[j] -= 2.0 * nbar_[j + 1] * u[j] * u[j] / std::pow(theta[j], 3);
  return c;
}

Mat PmfModel::fisher() const { return pmf_fisher_at(theta_star_); }

bool PmfModel::contains_ellipsoid(const Vec& center, const Mat& L, double radius) const {
  require_dim(center.size(), dim(), "PmfModel::contains_ellipsoid");
  for (int j = 0; j < dim(); ++j) {
    if (!(center[j] - radius * L.row(j).norm() > 0.0)) return false;
  }
  const Vec ones = Vec::Ones(dim());
  return 1.0 - center.sum() - radius * (L.transpose() * ones).norm() > 0.0;
}

double PmfModel::delta3_h_bound(double radius) const {
  // On {chi^2(theta || nbar) <= radius^2} every |theta_j / nbar_j - 1| <= radius / sqrt(min nbar),
  // and ||D^3 l(theta)||_H <= 2 max_j nbar_j^{5/2} / theta_j^3.
  const double nmin = nbar_.minCoeff();
  if (!(nmin > 0.0)) return std::numeric_limits<double>::infinity();
  const double q = radius / std::sqrt(nmin);
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  return 2.0 / (std::sqrt(nmin) * std::pow(1.0 - q, 3));
}

TargetPotential PmfModel::potential() const {
  auto self = std::make_shared<const PmfModel>(*this);
  TargetPotential f;
  f.name = "pmf";
  f.dim = dim();
  f.n = n_;
  f.convex = true;
  f.in_domain = [self](const Vec& t) { return self->in_domain(t); };
  f.value = [self](const Vec& t) { return self->value(t); };
  f.gradient = [self](const Vec& t) { return self->gradient(t); };
  f.hessian = [self](const Vec& t) { return self->hessian(t); };
  f.third_directional = [self](const Vec& t, const Vec& u) { return self->third_directional(t, u); };
  f.third_contract = [self](const Vec& t, const Vec& u) { return self->third_contract(t, u); };
  f.delta3_certified = [self](const Vec& mode, const MetricContext& H, double radius) {
    // the closed form is anchored at nbar with H = D^2 l(nbar)
    const Vec nb = self->nbar();
    if (self->mle_on_boundary() || (mode - nb).norm() > 1e-12) return std::numeric_limits<double>::infinity();
    const Mat Hn = self->hessian(nb);
    if ((Hn - H.A()).norm() > 1e-9 * Hn.norm()) return std::numeric_limits<double>::infinity();
    return self->delta3_h_bound(radius);
  };
  f.contains_ellipsoid = [self](const Vec& c, const Mat& L, double radius) {
    return self->contains_ellipsoid(c, L, radius);
  };
  return f;
}

NllEval pmf_nll(const PmfModel& model, const Vec& theta) {
  return {model.value(theta), model.gradient(theta), model.hessian(theta)};
}

Mat pmf_fisher(const PmfModel& model) { return model.fisher(); }

std::vector<long long> pmf_sample(const Vec& theta_star_full, long long n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("pmf_sample: n must be nonnegative");
  if ((theta_star_full.array() < 0.0).any() || std::abs(theta_star_full.sum() - 1.0) > 1e-12) {
    throw DomainError("pmf_sample: theta* must be a pmf");
  }
  Rng rng(seed);
  std::vector<long long> counts(static_cast<std::size_t>(theta_star_full.size()), 0);
  long long remaining = n;
  double mass = 1.0;
  // sequential conditional binomials
  for (Eigen::Index j = 0; j + 1 < theta_star_full.size(); ++j) {
    if (remaining == 0) break;
    const double p = mass > 0.0 ? std::clamp(theta_star_full[j] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<long long> dist(remaining, p);
    const long long c = dist(rng);
    counts[static_cast<std::size_t>(j)] = c;
    remaining -= c;
    mass -= theta_star_full[j];
  }
  counts.back() += remaining;
  return counts;
}

}  // namespace lapcert
