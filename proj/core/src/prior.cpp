#include "lapcert/prior.hpp"

#include "lapcert/metrics.hpp"
#include "lapcert/random.hpp"

#include <cmath>
#include <memory>

namespace lapcert {

namespace {

Mat checked_precision(const Mat& Sigma, const char* who) {
  if (Sigma.rows() != Sigma.cols()) throw DimensionError(std::string(who) + ": Sigma must be square");
  Eigen::LLT<Mat> llt(0.5 * (Sigma + Sigma.transpose()));
  if (llt.info() != Eigen::Success || (Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * Sigma.norm()) {
    throw std::invalid_argument(std::string(who) + ": Sigma is not symmetric positive definite");
  }
  const Mat P = llt.solve(Mat::Identity(Sigma.rows(), Sigma.cols()));
  return 0.5 * (P + P.transpose());
}

}  // namespace

PriorSpec PriorSpec::flat(int d) {
  if (d < 1) throw DimensionError("PriorSpec::flat: d must be positive");
  PriorSpec p;
  p.kind_ = PriorKind::flat;
  p.dim_ = d;
  return p;
}

PriorSpec PriorSpec::gaussian(const Vec& mu, const Mat& Sigma) {
  require_dim(Sigma.rows(), mu.size(), "PriorSpec::gaussian");
  PriorSpec p;
  p.kind_ = PriorKind::gaussian;
  p.dim_ = static_cast<int>(mu.size());
  p.mu_ = mu;
  p.sigma_ = Sigma;
  p.precision_ = checked_precision(Sigma, "PriorSpec::gaussian");
  return p;
}

PriorSpec PriorSpec::student_t(double nu, const Vec& mu, const Mat& Sigma) {
  if (!(nu > 0.0)) throw std::invalid_argument("PriorSpec::student_t: nu must be positive");
  PriorSpec p = gaussian(mu, Sigma);
  p.kind_ = PriorKind::student_t;
  p.nu_ = nu;
  return p;
}

double PriorSpec::rho(const Vec& theta) const {
  require_dim(theta.size(), dim_, "PriorSpec::rho");
  if (kind_ == PriorKind::flat) return 0.0;
  const Vec e = theta - mu_;
  const double q = e.dot(precision_ * e);
  if (kind_ == PriorKind::gaussian) return 0.5 * q;
  return 0.5 * (nu_ + dim_) * std::log1p(q / nu_);
}

Vec PriorSpec::grad_rho(const Vec& theta) const {
  require_dim(theta.size(), dim_, "PriorSpec::grad_rho");
  if (kind_ == PriorKind::flat) return Vec::Zero(dim_);
  const Vec Pe = precision_ * (theta - mu_);
  if (kind_ == PriorKind::gaussian) return Pe;
  const double q = (theta - mu_).dot(Pe);
  return (nu_ + dim_) / (nu_ + q) * Pe;
}

Vec PriorSpec::grad_log_density(const Vec& theta) const { return -grad_rho(theta); }

Mat PriorSpec::hess_rho(const Vec& theta) const {
  require_dim(theta.size(), dim_, "PriorSpec::hess_rho");
  if (kind_ == PriorKind::flat) return Mat::Zero(dim_, dim_);
  if (kind_ == PriorKind::gaussian) return precision_;
  const Vec Pe = precision_ * (theta - mu_);
  const double den = nu_ + (theta - mu_).dot(Pe);
  return (nu_ + dim_) * (precision_ / den - 2.0 * Pe * Pe.transpose() / (den * den));
}

double PriorSpec::third_rho(const Vec& theta, const Vec& u) const {
  require_dim(theta.size(), dim_, "PriorSpec::third_rho");
  if (kind_ != PriorKind::student_t) return 0.0;
  const Vec Pe = precision_ * (theta - mu_);
  const double den = nu_ + (theta - mu_).dot(Pe);
  const double a = u.dot(precision_ * u), b = Pe.dot(u);
  return (nu_ + dim_) * (-6.0 * a * b / (den * den) + 8.0 * b * b * b / (den * den * den));
}

Vec PriorSpec::third_rho_contract(const Vec& theta, const Vec& u) const {
  require_dim(theta.size(), dim_, "PriorSpec::third_rho_contract");
  if (kind_ != PriorKind::student_t) return Vec::Zero(dim_);
  const Vec Pe = precision_ * (theta - mu_);
  const Vec Pu = precision_ * u;
  const double den = nu_ + (theta - mu_).dot(Pe);
  const double a = u.dot(Pu), b = Pe.dot(u);
  const Vec g = -6.0 * (2.0 * b * Pu + a * Pe) / (den * den) + 24.0 * b * b * Pe / (den * den * den);
  return (nu_ + dim_) / 3.0 * g;
}

PriorQuantities prior_quantities(const PriorSpec& prior, const Mat& Fstar, const Vec& theta_star, double s,
                                 double n, bool numeric) {
  require_dim(theta_star.size(), prior.dim(), "prior_quantities");
  if (!(n > 0.0) || s < 0.0) throw std::invalid_argument("prior_quantities: need n > 0 and s >= 0");
  PriorQuantities q;
  if (prior.kind() == PriorKind::flat) return q;
  const MetricContext F(Fstar);
  const int d = prior.dim();
  const double radius = s * std::sqrt(d / n);

  if (!numeric) {
    const double pnorm = tensor_op_norm(SymmetricKForm::matrix(prior.precision()), F).value;
    const double off = F.vec_norm(prior.mu() - theta_star);
    const double factor = prior.kind() == PriorKind::student_t ? (prior.nu() + d) / prior.nu() : 1.0;
    q.M0 = factor * pnorm * off * off / (2.0 * d);
    q.delta01 = factor * pnorm * (off + radius);
    return q;
  }

  // exact log sup ratio over R^d, attained at mu
  q.M0 = prior.rho(theta_star) / d;
  // ||grad log w||_{F*} over the ellipsoid theta* + F^{-1/2} z, |z| <= radius
  auto objective = [&](const Vec& z) { return F.dual_norm(prior.grad_rho(theta_star + F.invSqrtA() * z)); };
  double best = objective(Vec::Zero(d));
  if (radius > 0.0) {
    Rng rng(derive_seed(0x9e1f, "prior_delta01"));
    for (int m = 0; m < 64; ++m) {
      Vec z = radius * uniform_ball(rng, d);
      double v = objective(z);
      double step = 0.25 * radius;
      for (int it = 0; it < 200 && step > 1e-9 * radius; ++it) {
        bool moved = false;
        for (int k = 0; k < d; ++k) {
          for (double sgn : {1.0, -1.0}) {
            Vec c = z;
            c[k] += sgn * step;
            if (c.norm() > radius) c *= radius / c.norm();
            const double vc = objective(c);
            if (vc > v) {
              v = vc;
              z = c;
              moved = true;
            }
          }
        }
        if (!moved) step *= 0.5;
      }
      best = std::max(best, v);
    }
  }
  q.delta01 = best;
  return q;
}

TargetPotential make_posterior(const TargetPotential& nll, const PriorSpec& prior) {
  require_dim(prior.dim(), nll.dim, "make_posterior");
  if (prior.kind() == PriorKind::flat) {
    TargetPotential v = nll;
    v.name = nll.name + "_posterior";
    return v;
  }
  auto base = std::make_shared<TargetPotential>(nll);
  auto pr = std::make_shared<PriorSpec>(prior);
  const double inv_n = 1.0 / nll.n;
  TargetPotential v;
  v.name = nll.name + "_posterior";
  v.dim = nll.dim;
  v.n = nll.n;
  v.convex = nll.convex && prior.kind() == PriorKind::gaussian;
  v.in_domain = nll.in_domain;
  v.contains_ellipsoid = nll.contains_ellipsoid;
  v.value = [base, pr, inv_n](const Vec& t) { return base->value(t) + inv_n * pr->rho(t); };
  v.gradient = [base, pr, inv_n](const Vec& t) { return Vec(base->gradient(t) + inv_n * pr->grad_rho(t)); };
  v.hessian = [base, pr, inv_n](const Vec& t) { return Mat(base->hessian(t) + inv_n * pr->hess_rho(t)); };
  if (nll.third_directional) {
    v.third_directional = [base, pr, inv_n](const Vec& t, const Vec& u) {
      return base->third_directional(t, u) + inv_n * pr->third_rho(t, u);
    };
  }
  if (nll.third_contract) {
    v.third_contract = [base, pr, inv_n](const Vec& t, const Vec& u) {
      return Vec(base->third_contract(t, u) + inv_n * pr->third_rho_contract(t, u));
    };
  }
  return v;
}

}  // namespace lapcert
