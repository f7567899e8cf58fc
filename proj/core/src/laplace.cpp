#include "lapcert/laplace.hpp"

#include "lapcert/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lapcert {

Mat LaplaceFit::covariance() const {
  const Mat P = precision();
  Mat C = P.llt().solve(Mat::Identity(P.rows(), P.cols()));
  return 0.5 * (C + C.transpose());
}

namespace {

double min_eig(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eig(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

LaplaceFit laplace_at(const TargetPotential& f, const Vec& mode) {
  check_point(f, mode, "laplace_at");
  LaplaceFit fit;
  fit.mode = mode;
  fit.n = f.n;
  fit.H = f.hessian(mode);
  if (!fit.H.allFinite()) throw ConvergenceError("laplace_at: Hessian not finite");
  fit.H = 0.5 * (fit.H + fit.H.transpose());
  if (!(min_eig(fit.H) > 0.0)) throw ConvergenceError("laplace_at: Hessian at the mode is not positive definite");
  const Vec g = f.gradient(mode);
  fit.grad_norm = g.norm();
  fit.initial_grad_norm = fit.grad_norm;
  fit.grad_norm_H = std::sqrt(std::max(0.0, g.dot(fit.H.llt().solve(g))));
  return fit;
}

LaplaceFit find_mode(const TargetPotential& f, const Vec& start, const NewtonOptions& opts) {
  check_point(f, start, "find_mode");
  const int d = f.dim;
  Vec theta = start;
  double fv = f.value(theta);
  Vec g = f.gradient(theta);
  const double g0 = g.norm();
  const Mat H0 = f.hessian(theta);
  if (!H0.allFinite()) throw ConvergenceError("find_mode: Hessian not finite");
  // curvature floor relative to the start point, so vanishing curvature at infinity is not accepted
  const double curv_floor = 1e-10 * std::max(std::abs(max_eig(H0)), 1e-300);
  const double tol = opts.tol * std::sqrt(static_cast<double>(d));

  for (int it = 0; it <= opts.max_iter; ++it) {
    Mat H = f.hessian(theta);
    if (!H.allFinite() || !g.allFinite()) throw ConvergenceError("find_mode: Hessian not finite");
    H = 0.5 * (H + H.transpose());
    const double lmin = min_eig(H);
    const double lmax = std::max(max_eig(H), 1e-300);

    if (lmin > curv_floor) {
      const double dec = std::sqrt(std::max(0.0, g.dot(H.llt().solve(g))));
      if (dec <= tol) {
        LaplaceFit fit;
        fit.mode = theta;
        fit.H = H;
        fit.n = f.n;
        fit.iterations = it;
        fit.grad_norm = g.norm();
        fit.grad_norm_H = dec;
        fit.initial_grad_norm = g0;
        return fit;
      }
    }
    if (it == opts.max_iter) break;

    // Levenberg shift when the Hessian is nearly singular or indefinite
    double shift = lmin > 1e-12 * lmax ? 0.0 : std::abs(lmin) + 1e-8 * lmax;
    Vec p;
    for (int k = 0; k < 60; ++k) {
      Eigen::LLT<Mat> llt(H + shift * Mat::Identity(d, d));
      if (llt.info() == Eigen::Success) {
        p = -llt.solve(g);
        if (p.allFinite() && g.dot(p) < 0.0) break;
      }
      shift = std::max(2.0 * shift, 1e-8 * lmax);
      p.resize(0);
    }
    if (p.size() == 0) throw ConvergenceError("find_mode: could not form a descent direction");

    double t = 1.0;
    // stay strictly inside the domain by shrinking, never clipping
    int shrink = 0;
    while (!f.inside(theta + t * p)) {
      t *= 0.5;
      if (++shrink > 80) throw ConvergenceError("find_mode: step cannot stay inside the domain");
    }
    const double slope = g.dot(p);
    double fnew = f.value(theta + t * p);
    int bt = 0;
    while (!(fnew <= fv + 1e-4 * t * slope)) {
      // the decrease is below rounding level: accept the Newton step as is
      if (std::abs(fnew - fv) <= 1e-14 * (1.0 + std::abs(fv))) break;
      t *= 0.5;
      if (++bt > 60) break;
      fnew = f.value(theta + t * p);
    }
    theta += t * p;
    fv = fnew;
    g = f.gradient(theta);
    if (!theta.allFinite() || theta.norm() > opts.max_norm * (1.0 + start.norm())) {
      throw ConvergenceError("find_mode: iterates diverge; the minimizer may not exist");
    }
  }
  throw ConvergenceError("find_mode: no convergence after " + std::to_string(opts.max_iter) + " iterations");
}

// ---------------------------------------------------------------------------

std::string to_string(Delta3Mode m) {
  switch (m) {
    case Delta3Mode::analytic:
      return "analytic";
    case Delta3Mode::certified_bound:
      return "certified_bound";
    case Delta3Mode::empirical:
      return "empirical";
  }
  return "unknown";
}

std::string to_string(Soundness s) {
  switch (s) {
    case Soundness::certified:
      return "certified";
    case Soundness::heuristic:
      return "heuristic";
    case Soundness::invalid:
      return "invalid";
  }
  return "unknown";
}

double delta3_ratio(const TargetPotential& f, const LaplaceFit& fit, const Vec& theta, Vec* direction) {
  const MetricContext Hm(fit.H);
  const double dist = Hm.vec_norm(theta - fit.mode);
  if (dist <= 0.0) return 0.0;
  const Mat D = f.hessian(theta) - fit.H;
  const TensorNorm tn = tensor_op_norm(SymmetricKForm::matrix(0.5 * (D + D.transpose())), Hm);
  if (direction) *direction = tn.witness;
  return tn.value / dist;
}

Delta3Report estimate_delta3(const TargetPotential& f, const LaplaceFit& fit, double r, const Delta3Options& opts) {
  if (!(r > 0.0)) throw std::invalid_argument("estimate_delta3: r must be positive");
  const int d = fit.dim();
  const double rho = r * std::sqrt(d / fit.n);
  const MetricContext Hm(fit.H);
  const auto [inside, exact] = ellipsoid_in_domain(f, fit.mode, Hm.invSqrtA(), rho);
  (void)exact;
  if (!inside) throw DomainError("estimate_delta3: U(r) is not contained in the domain");

  Delta3Report rep;
  rep.r = r;
  if (!opts.force_empirical && f.delta3_analytic) {
    rep.mode = Delta3Mode::analytic;
    rep.value = f.delta3_analytic(r);
    return rep;
  }
  if (!opts.force_empirical && opts.use_certified && f.delta3_certified) {
    const double v = f.delta3_certified(fit.mode, Hm, rho);
    if (std::isfinite(v)) {
      rep.mode = Delta3Mode::certified_bound;
      rep.value = v;
      return rep;
    }
  }

  rep.mode = Delta3Mode::empirical;
  const Mat& W = Hm.invSqrtA();
  auto theta_of = [&](const Vec& z) { return Vec(fit.mode + rho * (W * z)); };
  auto ratio = [&](const Vec& z) {
    if (z.norm() < 1e-9) return 0.0;
    return delta3_ratio(f, fit, theta_of(z));
  };

  ScrambledBallSequence seq(d, opts.seed);
  const int keep = std::max(1, opts.refine_starts);
  std::vector<std::pair<double, Vec>> top;
  for (int i = 0; i < opts.budget; ++i) {
    const Vec z = seq.next();
    const double v = ratio(z);
    ++rep.samples;
    if (static_cast<int>(top.size()) < keep || v > top.back().first) {
      top.emplace_back(v, z);
      std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (static_cast<int>(top.size()) > keep) top.pop_back();
    }
  }

  // local pattern-search refinement inside the unit ball
  Rng rng(derive_seed(opts.seed, "delta3_refine"));
  double best = -1.0;
  Vec best_z;
  for (auto& [v0, z0] : top) {
    Vec z = z0;
    double v = v0;
    double step = 0.1;
    while (step > 1e-7) {
      bool moved = false;
      std::vector<Vec> dirs;
      for (int k = 0; k < d; ++k) {
        dirs.push_back(Vec::Unit(d, k));
        dirs.push_back(-Vec::Unit(d, k));
      }
      for (int k = 0; k < 2 * d; ++k) dirs.push_back(uniform_sphere(rng, d));
      for (const Vec& dir : dirs) {
        Vec c = z + step * dir;
        if (c.norm() > 1.0) c /= c.norm();
        const double vc = ratio(c);
        ++rep.samples;
        if (vc > v) {
          v = vc;
          z = c;
          moved = true;
        }
      }
      if (!moved) step *= 0.5;
    }
    if (v > best) {
      best = v;
      best_z = z;
    }
  }
  rep.witness_theta = theta_of(best_z);
  Vec dir;
  rep.value = delta3_ratio(f, fit, rep.witness_theta, &dir);
  rep.witness_direction = dir;
  return rep;
}

Certificate certify(const TargetPotential& f, const LaplaceFit& fit, double r, const Delta3Report& delta3) {
  Certificate c;
  const int d = fit.dim();
  const double n = fit.n;
  c.r = r;
  c.delta3 = delta3.value;
  c.delta3_mode = delta3.mode;
  c.laplace_term = delta3.value * d / std::sqrt(2.0 * n);
  c.tail_term = 3.0 * std::exp(-d * r * r / 9.0);
  c.total = std::min(1.0, c.laplace_term + c.tail_term);
  if (!std::isfinite(c.total)) c.total = 1.0;
  c.r_at_least_6 = r >= 6.0;
  c.convex = f.convex;
  if (r > 0.0 && std::isfinite(r)) {
    const MetricContext Hm(fit.H);
    const auto [inside, exact] = ellipsoid_in_domain(f, fit.mode, Hm.invSqrtA(), r * std::sqrt(d / n));
    c.neighborhood_in_domain = inside;
    c.neighborhood_check_exact = exact;
  }
  c.delta3_condition = r * delta3.value * std::sqrt(d / n) <= 0.5;
  if (!(c.r_at_least_6 && c.neighborhood_in_domain && c.delta3_condition)) {
    c.soundness = Soundness::invalid;
  } else if (delta3.mode == Delta3Mode::empirical || !c.neighborhood_check_exact || !c.convex) {
    c.soundness = Soundness::heuristic;
  } else {
    c.soundness = Soundness::certified;
  }
  return c;
}

RStrategy RStrategy::fixed(double r) {
  RStrategy s;
  s.kind = Kind::fixed;
  s.r = r;
  return s;
}

RStrategy RStrategy::uniform_bound(double M) {
  RStrategy s;
  s.kind = Kind::uniform_bound;
  s.M = M;
  return s;
}

RStrategy RStrategy::scan(std::vector<double> grid) {
  RStrategy s;
  s.kind = Kind::scan;
  s.grid = std::move(grid);
  return s;
}

double choose_r(const TargetPotential& f, const LaplaceFit& fit, const RStrategy& strategy,
                const Delta3Options& opts) {
  const int d = fit.dim();
  switch (strategy.kind) {
    case RStrategy::Kind::fixed:
      return strategy.r;
    case RStrategy::Kind::uniform_bound: {
      if (!(strategy.M > 0.0)) throw std::invalid_argument("choose_r: M must be positive");
      const double ratio = fit.n / d;
      if (ratio < 144.0 * strategy.M * strategy.M) {
        throw std::invalid_argument("choose_r: uniform bound needs n/d >= (12 M)^2");
      }
      return std::sqrt(ratio) / (2.0 * strategy.M);
    }
    case RStrategy::Kind::scan: {
      if (strategy.grid.empty()) throw std::invalid_argument("choose_r: empty scan grid");
      std::vector<double> grid = strategy.grid;
      std::sort(grid.begin(), grid.end());
      double best_r = grid.front();
      double best_total = std::numeric_limits<double>::infinity();
      bool best_valid = false;
      for (double r : grid) {
        Certificate c;
        try {
          c = certify(f, fit, r, estimate_delta3(f, fit, r, opts));
        } catch (const DomainError&) {
          continue;
        }
        const bool valid = c.soundness != Soundness::invalid;
        // valid candidates beat invalid ones; strict < keeps the smaller r on ties
        if ((valid && !best_valid) || (valid == best_valid && c.total < best_total)) {
          best_r = r;
          best_total = c.total;
          best_valid = valid;
        }
      }
      return best_r;
    }
  }
  return strategy.r;
}

EmpiricalCertificate empirical_certificate(const TargetPotential& f, const LaplaceFit& fit, double r,
                                           int mc_samples, std::uint64_t seed) {
  if (mc_samples < 2) throw std::invalid_argument("empirical_certificate: need at least 2 samples");
  const int d = fit.dim();
  const double n = fit.n;
  const MetricContext Hm(fit.H);
  const Mat& W = Hm.invSqrtA();
  const double zmax = r * std::sqrt(static_cast<double>(d));  // |z| <= r sqrt(d) <=> theta in U(r)
  Rng rng(derive_seed(seed, "empcert"));
  EmpiricalCertificate out;
  double mean = 0.0, m2 = 0.0;
  const int max_proposals = 50 * mc_samples;
  while (out.accepted < mc_samples && out.proposed < max_proposals) {
    const Vec z = standard_normal(rng, d);
    ++out.proposed;
    if (z.norm() > zmax) continue;
    const Vec delta = W * z / std::sqrt(n);
    const Vec theta = fit.mode + delta;
    if (!f.inside(theta)) continue;
    const Vec resid = f.gradient(theta) - fit.H * delta;
    const double q = Hm.dual_norm(resid);
    const double q2 = q * q;
    ++out.accepted;
    const double dlt = q2 - mean;
    mean += dlt / out.accepted;
    m2 += dlt * (q2 - mean);
    if (min_eig(W * f.hessian(theta) * W) < 0.5) ++out.hessian_violations;
  }
  if (out.accepted < 2) throw std::runtime_error("empirical_certificate: all samples rejected from U(r)");
  const double var = m2 / (out.accepted - 1);
  const double se_mean = std::sqrt(var / out.accepted);
  out.local_term = std::sqrt(n / 2.0) * std::sqrt(mean);
  out.local_se = mean > 0.0 ? std::sqrt(n / 2.0) * se_mean / (2.0 * std::sqrt(mean)) : 0.0;
  out.tail_term = 3.0 * std::exp(-d * r * r / 9.0);
  out.total = std::min(1.0, out.local_term + out.tail_term);
  return out;
}

GrowthReport check_growth_bound(const TargetPotential& f, const LaplaceFit& fit, double r, int probes,
                                std::uint64_t seed) {
  const int d = fit.dim();
  const double rad = r * std::sqrt(d / fit.n);
  const MetricContext Hm(fit.H);
  const Mat& W = Hm.invSqrtA();
  const double f0 = f.value(fit.mode);
  Rng rng(derive_seed(seed, "growth"));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  GrowthReport rep;
  rep.min_growth_ratio = std::numeric_limits<double>::infinity();
  rep.min_hessian_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < probes; ++i) {
    const Vec u = uniform_sphere(rng, d);
    const double t = rad * (1.0 + 9.0 * unif(rng));  // radii in (r sqrt(d/n), 10 r sqrt(d/n)]
    const Vec theta = fit.mode + t * (W * u);
    if (!f.inside(theta)) {
      ++rep.skipped;
      continue;
    }
    ++rep.probes;
    const double ratio = (f.value(theta) - f0) / (0.25 * r * std::sqrt(d / fit.n) * t);
    rep.min_growth_ratio = std::min(rep.min_growth_ratio, ratio);
    if (ratio < 1.0 - 1e-12) ++rep.growth_violations;
  }
  for (int i = 0; i < probes; ++i) {
    const Vec theta = fit.mode + rad * (W * uniform_ball(rng, d));
    if (!f.inside(theta)) continue;
    ++rep.hessian_probes;
    const double lam = min_eig(W * f.hessian(theta) * W);
    rep.min_hessian_ratio = std::min(rep.min_hessian_ratio, lam);
    if (lam < 0.5 - 1e-12) ++rep.hessian_violations;
  }
  return rep;
}

}  // namespace lapcert
