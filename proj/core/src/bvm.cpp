#include "lapcert/bvm.hpp"

#include "lapcert/metrics.hpp"
#include "lapcert/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lapcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Coordinate pattern search maximizing obj over the unit ball (dimension of z).
template <class Obj>
double ball_ascent(Obj&& obj, Vec& z, double v, double step = 0.1, double min_step = 1e-6) {
  const Eigen::Index m = z.size();
  while (step > min_step) {
    bool moved = false;
    for (Eigen::Index k = 0; k < m; ++k) {
      for (double sgn : {1.0, -1.0}) {
        Vec c = z;
        c[k] += sgn * step;
        const double cn = c.norm();
        if (cn > 1.0) c /= cn;
        const double vc = obj(c);
        if (vc > v) {
          v = vc;
          z = c;
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return v;
}

}  // namespace

LaplaceFit compute_mle(const GlmModel& model, const Vec& start, const NewtonOptions& opts) {
  return find_mode(model.potential(), start, opts);
}

LaplaceFit compute_mle(const PmfModel& model) {
  if (model.mle_on_boundary()) throw DomainError("compute_mle: a zero count puts the MLE on the simplex boundary");
  return laplace_at(model.potential(), model.nbar());
}

double ustar_radius(double s, int d, double n) { return s * std::sqrt(d / n); }

EventReport check_events(const TargetPotential& ell, const Mat& Fstar, const Vec& theta_star, double s, double eps2,
                         double delta3_2s, int pair_budget, std::uint64_t seed) {
  require_dim(theta_star.size(), ell.dim, "check_events");
  if (s < 0.0) throw std::invalid_argument("check_events: s must be nonnegative");
  const int d = ell.dim;
  const MetricContext F(Fstar);
  const Mat& W = F.invSqrtA();
  const double rho = ustar_radius(2.0 * s, d, ell.n);
  if (!ellipsoid_in_domain(ell, theta_star, W, rho).first) {
    throw DomainError("check_events: U*(2s) leaves the parameter domain");
  }

  EventReport rep;
  rep.seed = seed;
  rep.s = s;
  rep.eps2 = eps2;
  rep.delta3_2s = delta3_2s;
  rep.threshold1 = ustar_radius(s, d, ell.n);
  rep.grad_norm = F.dual_norm(ell.gradient(theta_star));
  const Mat H = ell.hessian(theta_star);
  rep.hess_dev = tensor_op_norm(SymmetricKForm::matrix(0.5 * (H - Fstar + (H - Fstar).transpose())), F).value;

  if (rho > 0.0 && pair_budget > 0) {
    auto ratio = [&](const Vec& zz) {
      const Vec z1 = zz.head(d), z2 = zz.tail(d);
      const double dist = rho * (z1 - z2).norm();
      if (dist < 1e-12 * rho) return 0.0;
      const Mat D = ell.hessian(theta_star + rho * (W * z1)) - ell.hessian(theta_star + rho * (W * z2));
      return sym_operator_norm(W * (0.5 * (D + D.transpose())) * W) / dist;
    };
    // pairs live in the product of two unit balls; project each half separately
    auto project = [&](Vec zz) {
      for (int h = 0; h < 2; ++h) {
        const double nn = zz.segment(h * d, d).norm();
        if (nn > 1.0) zz.segment(h * d, d) /= nn;
      }
      return zz;
    };
    ScrambledBallSequence a(d, derive_seed(seed, "pairs_a")), b(d, derive_seed(seed, "pairs_b"));
    std::vector<std::pair<double, Vec>> top;
    for (int i = 0; i < pair_budget; ++i) {
      Vec zz(2 * d);
      zz << a.next(), b.next();
      const double v = ratio(zz);
      top.emplace_back(v, zz);
      ++rep.pairs;
    }
    std::sort(top.begin(), top.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    double best = top.empty() ? 0.0 : top.front().first;
    for (std::size_t t = 0; t < std::min<std::size_t>(3, top.size()); ++t) {
      Vec zz = top[t].second;
      double v = top[t].first;
      double step = 0.1;
      while (step > 1e-5) {
        bool moved = false;
        for (int k = 0; k < 2 * d; ++k) {
          for (double sgn : {1.0, -1.0}) {
            Vec c = zz;
            c[k] += sgn * step;
            c = project(c);
            const double vc = ratio(c);
            ++rep.pairs;
            if (vc > v) {
              v = vc;
              zz = c;
              moved = true;
            }
          }
        }
        if (!moved) step *= 0.5;
      }
      best = std::max(best, v);
    }
    rep.lipschitz = best;
  }

  rep.E1 = rep.grad_norm <= rep.threshold1;
  rep.E2 = rep.hess_dev <= eps2;
  rep.E3 = rep.lipschitz <= delta3_2s;
  return rep;
}

EventReport check_events(const GlmModel& model, double s, int pair_budget, std::uint64_t seed) {
  const Delta3StarGlm d3 = delta3_star_glm(model, 2.0 * s, 0);
  return check_events(model.potential(), model.fisher(), model.theta_star(), s, 0.0, d3.certified, pair_budget,
                      seed);
}

EventReport check_events(const PmfModel& model, double s, int pair_budget, std::uint64_t seed) {
  const int d = model.dim();
  const double eps2 = std::sqrt(s * s * d / (model.n() * model.theta_min()));
  const double d3 = pmf_containment_holds(model, s) ? delta3_star_pmf(model, s).certified : kInf;
  EventReport rep =
      check_events(model.potential(), model.fisher(), model.theta_star(), s, eps2, d3, pair_budget, seed);
  rep.has_E0 = true;
  rep.chi2 = chi_square(model.nbar_full(), model.theta_star_full());
  rep.E0 = rep.chi2 <= s * s * d / model.n();
  return rep;
}

Delta3StarGlm delta3_star_glm(const GlmModel& model, double s, int budget, std::uint64_t seed) {
  if (s < 0.0) throw std::invalid_argument("delta3_star_glm: s must be nonnegative");
  const int d = model.dim();
  const MetricContext F(model.fisher());
  const double rho = ustar_radius(s, d, model.n());
  const TargetPotential f = model.potential();
  if (!ellipsoid_in_domain(f, model.theta_star(), F.invSqrtA(), rho).first) {
    throw DomainError("delta3_star_glm: U*(s) leaves the parameter domain");
  }
  Delta3StarGlm out;
  out.lambda_min = F.lambda_min();
  out.interval_bound = model.third_norm_bound(model.theta_star(), F, rho).upper;
  out.certified = out.interval_bound;
  if (model.link().kind == LinkKind::logistic) {
    const Design& D = model.design();
    const CubicSup cs = sup_abs_cubic_sum(D.X, D.weights / D.n);
    out.logistic_bound = logistic_d3_sup() * std::pow(out.lambda_min, -1.5) * cs.upper;
    out.certified = std::min(out.certified, out.logistic_bound);
  }
  if (budget > 0) {
    NormOptions no;
    no.restarts = 8;
    auto obj = [&](const Vec& z) {
      const Vec theta = model.theta_star() + rho * (F.invSqrtA() * z);
      return tensor_op_norm(third_derivative_form(f, theta), F, no).value;
    };
    ScrambledBallSequence seq(d, derive_seed(seed, "delta3_star"));
    double best = obj(Vec::Zero(d));
    Vec bz = Vec::Zero(d);
    for (int i = 0; i < budget; ++i) {
      const Vec z = seq.next();
      const double v = obj(z);
      if (v > best) {
        best = v;
        bz = z;
      }
    }
    if (rho > 0.0) best = ball_ascent(obj, bz, best, 0.1, 1e-4);
    out.empirical = best;
  }
  return out;
}

bool pmf_containment_holds(const PmfModel& model, double s) {
  return 4.0 * s * s * model.dim() / model.n() <= model.theta_min() / 4.0;
}

Delta3StarPmf delta3_star_pmf(const PmfModel& model, double s) {
  if (!pmf_containment_holds(model, s)) {
    throw DomainError("delta3_star_pmf: needs (2s)^2 d / n <= theta*_min / 4");
  }
  Delta3StarPmf out;
  const Vec& nb = model.nbar_full();
  const Vec& ts = model.theta_star_full();
  double m = 0.0;
  for (Eigen::Index j = 0; j < ts.size(); ++j) m = std::max(m, nb[j] / std::pow(ts[j], 1.5));
  out.certified = 16.0 * m;
  out.closed_form = pmf_tensor_norm_closed_form(model.theta_min());
  return out;
}

double delta2_star(const std::function<Mat(const Vec&)>& F, const std::function<bool(const Vec&)>& in_domain,
                   const Vec& theta_star, double n, double s, int budget, std::uint64_t seed) {
  const int d = static_cast<int>(theta_star.size());
  const MetricContext F0(F(theta_star));
  const Mat& W = F0.invSqrtA();
  auto value_at = [&](const Vec& theta) {
    const Mat M = W * F(theta) * W;
    return sym_operator_norm(0.5 * (M + M.transpose()));
  };
  double best = value_at(theta_star);
  const double rho = ustar_radius(s, d, n);
  if (rho <= 0.0 || budget <= 0) return best;
  auto obj = [&](const Vec& z) {
    const Vec theta = theta_star + rho * (W * z);
    if (in_domain && !in_domain(theta)) throw DomainError("delta2_star: U*(s) leaves the parameter domain");
    return value_at(theta);
  };
  ScrambledBallSequence seq(d, derive_seed(seed, "delta2_star"));
  Vec bz = Vec::Zero(d);
  for (int i = 0; i < budget; ++i) {
    const Vec z = seq.next();
    const double v = obj(z);
    if (v > best) {
      best = v;
      bz = z;
    }
  }
  return ball_ascent(obj, bz, best, 0.1, 1e-6);
}

double delta2_star(const GlmModel& model, double s, int budget, std::uint64_t seed) {
  return delta2_star([&](const Vec& t) { return model.hessian(t); },
                     [&](const Vec& t) { return model.in_domain(t); }, model.theta_star(), model.n(), s, budget,
                     seed);
}

double delta2_star(const PmfModel& model, double s, int budget, std::uint64_t seed) {
  return delta2_star([](const Vec& t) { return pmf_fisher_at(pmf_full(t)); },
                     [&](const Vec& t) { return model.in_domain(t); }, model.theta_star(), model.n(), s, budget,
                     seed);
}

BvmBound bvm_bound(const BvmContext& ctx) {
  if (ctx.d < 1 || !(ctx.n > 0.0) || ctx.s < 0.0) throw std::invalid_argument("bvm_bound: need d >= 1, n > 0, s >= 0");
  const double d = ctx.d, n = ctx.n, s = ctx.s;
  const double rad = std::sqrt(d / n);
  BvmBound b;
  // Laplace step at r = s/2 with delta3(s/2) <= 8 delta3*(2s)
  b.laplace_local = 8.0 * ctx.delta3_2s * d / std::sqrt(2.0 * n);
  b.laplace_tail = 3.0 * std::exp(-d * s * s / 36.0);
  b.prior_local = ctx.prior.delta01 / std::sqrt(n);
  b.prior_tail = 4.0 * std::exp(d * (ctx.prior.M0 - s * s / 144.0));
  // Gaussian comparison with tau = 1/4: 2 (eps / tau) sqrt(d)
  b.gauss = 8.0 * std::sqrt(d) * (s * ctx.delta3_s * rad + ctx.eps2);
  const double sum = b.laplace() + b.prior() + b.gauss;
  b.total = std::isfinite(sum) ? std::min(1.0, sum) : 1.0;

  b.s_at_least_12 = s >= 12.0;
  b.neighborhood_in_domain = ctx.neighborhood_in_domain;
  b.delta3_condition = 2.0 * s * ctx.delta3_2s * rad <= 0.25;
  b.eps2_condition = ctx.eps2 <= 0.5;
  b.delta01_condition = ctx.prior.delta01 <= std::sqrt(n * d) / 6.0;
  return b;
}

BvmBound bvm_bound_logconcave(const BvmContext& ctx, double C23, double delta2_2s) {
  if (!(C23 > 0.0) || !std::isfinite(C23)) throw std::invalid_argument("bvm_bound_logconcave: C23 must be positive");
  BvmContext c = ctx;
  const double cap = 2.0 * C23;  // (3/2)^{3/2} C23 <= 2 C23
  c.delta3_s = cap;
  c.delta3_2s = cap;
  BvmBound b = bvm_bound(c);
  b.delta2_condition = delta2_2s <= 1.5;
  b.radius_condition = ctx.s * std::sqrt(ctx.d / ctx.n) <= 1.0 / (16.0 * C23);
  return b;
}

Gaussian bvm_gaussian_target(const Vec& theta_hat, const Mat& Fstar, double n) {
  require_dim(Fstar.rows(), theta_hat.size(), "bvm_gaussian_target");
  if (!(n > 0.0)) throw std::invalid_argument("bvm_gaussian_target: n must be positive");
  Eigen::LLT<Mat> llt(Fstar);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("bvm_gaussian_target: F* is singular");
  return Gaussian::from_precision(theta_hat, n * Fstar);
}

Gaussian laplace_gaussian(const LaplaceFit& fit) { return Gaussian::from_precision(fit.mode, fit.precision()); }

}  // namespace lapcert
