#include "lapcert/potential.hpp"

#include "lapcert/random.hpp"

#include <cmath>
#include <memory>

namespace lapcert {

void check_point(const TargetPotential& f, const Vec& theta, const char* where) {
  require_dim(theta.size(), f.dim, where);
  if (!theta.allFinite()) throw DomainError(std::string(where) + ": non-finite parameter");
  if (!f.inside(theta)) throw DomainError(std::string(where) + ": parameter outside the domain of " + f.name);
}

std::pair<bool, bool> ellipsoid_in_domain(const TargetPotential& f, const Vec& center, const Mat& L,
                                          double radius, std::uint64_t seed) {
  if (f.contains_ellipsoid) return {f.contains_ellipsoid(center, L, radius), true};
  if (!f.in_domain) return {true, true};
  if (!f.in_domain(center)) return {false, true};
  Rng rng(seed);
  constexpr int kProbes = 4000;
  for (int i = 0; i < kProbes; ++i) {
    const Vec z = uniform_sphere(rng, f.dim);
    if (!f.in_domain(center + radius * (L * z))) return {false, true};
  }
  return {true, false};
}

SymmetricKForm third_derivative_form(const TargetPotential& f, const Vec& theta) {
  if (!f.third_directional) {
    throw std::invalid_argument("third_derivative_form: potential " + f.name + " has no third derivative");
  }
  auto dir = f.third_directional;
  SymmetricKForm::GradFn grad;
  if (f.third_contract) {
    auto contract = f.third_contract;
    grad = [contract, theta](const Vec& u) { return Vec(3.0 * contract(theta, u)); };
  } else {
    grad = [dir, theta](const Vec& u) {
      // the form is cubic in u, so central differences are exact up to rounding and an h^2 term
      const double h = 1e-4 * (1.0 + u.norm());
      Vec g(u.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        Vec up = u, um = u;
        up[i] += h;
        um[i] -= h;
        g[i] = (dir(theta, up) - dir(theta, um)) / (2.0 * h);
      }
      return g;
    };
  }
  return SymmetricKForm::callable(3, f.dim, [dir, theta](const Vec& u) { return dir(theta, u); },
                                  std::move(grad));
}

TargetPotential make_cubic_radial(int d, double n) {
  if (d < 1) throw std::invalid_argument("make_cubic_radial: d must be >= 1");
  if (!(n > 0.0)) throw std::invalid_argument("make_cubic_radial: n must be positive");
  TargetPotential f;
  f.name = "cubic_radial";
  f.dim = d;
  f.n = n;
  f.convex = true;
  f.value = [](const Vec& t) {
    const double r = t.norm();
    return 0.5 * r * r + r * r * r / 6.0;
  };
  f.gradient = [](const Vec& t) { return Vec(t + 0.5 * t.norm() * t); };
  f.hessian = [d](const Vec& t) {
    const double r = t.norm();
    Mat h = (1.0 + 0.5 * r) * Mat::Identity(d, d);
    if (r > 0.0) h += t * t.transpose() / (2.0 * r);
    return h;
  };
  f.third_directional = [](const Vec& t, const Vec& u) {
    const double r = t.norm();
    if (r == 0.0) return 0.0;  // one-sided limits differ; the origin is measure zero
    const double tu = t.dot(u);
    return 1.5 * tu * u.squaredNorm() / r - tu * tu * tu / (2.0 * r * r * r);
  };
  f.third_contract = [](const Vec& t, const Vec& u) {
    const double r = t.norm();
    if (r == 0.0) return Vec(Vec::Zero(t.size()));
    const double tu = t.dot(u);
    return Vec((t * u.squaredNorm() + 2.0 * tu * u) / (2.0 * r) - tu * tu * t / (2.0 * r * r * r));
  };
  f.delta3_analytic = [](double) { return 1.0; };
  return f;
}

TargetPotential make_ones_cubic(int d, double n) {
  if (d < 1) throw std::invalid_argument("make_ones_cubic: d must be >= 1");
  if (!(n > 0.0)) throw std::invalid_argument("make_ones_cubic: n must be positive");
  TargetPotential f;
  f.name = "ones_cubic";
  f.dim = d;
  f.n = n;
  f.convex = true;
  f.value = [](const Vec& t) {
    const double s = t.sum();
    return 0.5 * t.squaredNorm() + std::abs(s) * s * s / 6.0;
  };
  f.gradient = [](const Vec& t) {
    const double s = t.sum();
    return Vec(t + Vec::Constant(t.size(), 0.5 * std::abs(s) * s));
  };
  f.hessian = [d](const Vec& t) {
    return Mat(Mat::Identity(d, d) + std::abs(t.sum()) * Mat::Ones(d, d));
  };
  f.third_directional = [](const Vec& t, const Vec& u) {
    const double s = t.sum();
    const double su = u.sum();
    const double sgn = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    return sgn * su * su * su;
  };
  f.third_contract = [](const Vec& t, const Vec& u) {
    const double s = t.sum();
    const double su = u.sum();
    const double sgn = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    return Vec(Vec::Constant(t.size(), sgn * su * su));
  };
  const double val = std::pow(static_cast<double>(d), 1.5);
  f.delta3_analytic = [val](double) { return val; };
  return f;
}

TargetPotential make_quadratic(const Mat& Q, const Vec& a, double n) {
  if (Q.rows() != Q.cols() || Q.rows() != a.size() || a.size() == 0) {
    throw DimensionError("make_quadratic: Q must be square and match a");
  }
  if (!(n > 0.0)) throw std::invalid_argument("make_quadratic: n must be positive");
  const Mat Qs = 0.5 * (Q + Q.transpose());
  const int d = static_cast<int>(a.size());
  TargetPotential f;
  f.name = "quadratic";
  f.dim = d;
  f.n = n;
  Eigen::SelfAdjointEigenSolver<Mat> es(Qs, Eigen::EigenvaluesOnly);
  f.convex = es.eigenvalues().minCoeff() >= 0.0;
  f.value = [Qs, a](const Vec& t) {
    const Vec e = t - a;
    return 0.5 * e.dot(Qs * e);
  };
  f.gradient = [Qs, a](const Vec& t) { return Vec(Qs * (t - a)); };
  f.hessian = [Qs](const Vec&) { return Qs; };
  f.third_directional = [](const Vec&, const Vec&) { return 0.0; };
  f.third_contract = [](const Vec& t, const Vec&) { return Vec(Vec::Zero(t.size())); };
  f.delta3_analytic = [](double) { return 0.0; };
  return f;
}

TargetPotential affine_pushforward(const TargetPotential& f, const Mat& T, const Vec& b) {
  require_dim(T.rows(), f.dim, "affine_pushforward");
  require_dim(T.cols(), f.dim, "affine_pushforward");
  require_dim(b.size(), f.dim, "affine_pushforward");
  Eigen::FullPivLU<Mat> lu(T);
  if (!lu.isInvertible()) throw std::invalid_argument("affine_pushforward: T is singular");
  const Mat Ti = lu.inverse();
  const Mat TiT = Ti.transpose();
  auto base = std::make_shared<TargetPotential>(f);
  auto back = [Ti, b](const Vec& phi) { return Vec(Ti * (phi - b)); };

  TargetPotential g;
  g.name = f.name + "_affine";
  g.dim = f.dim;
  g.n = f.n;
  g.convex = f.convex;
  if (f.in_domain) g.in_domain = [base, back](const Vec& p) { return base->in_domain(back(p)); };
  g.value = [base, back](const Vec& p) { return base->value(back(p)); };
  g.gradient = [base, back, TiT](const Vec& p) { return Vec(TiT * base->gradient(back(p))); };
  g.hessian = [base, back, Ti, TiT](const Vec& p) { return Mat(TiT * base->hessian(back(p)) * Ti); };
  if (f.third_directional) {
    g.third_directional = [base, back, Ti](const Vec& p, const Vec& u) {
      return base->third_directional(back(p), Ti * u);
    };
  }
  if (f.third_contract) {
    g.third_contract = [base, back, Ti, TiT](const Vec& p, const Vec& u) {
      return Vec(TiT * base->third_contract(back(p), Ti * u));
    };
  }
  g.delta3_analytic = f.delta3_analytic;
  if (f.delta3_certified) {
    g.delta3_certified = [base, back, T](const Vec& mode, const MetricContext& H, double radius) {
      return base->delta3_certified(back(mode), MetricContext(T.transpose() * H.A() * T), radius);
    };
  }
  if (f.contains_ellipsoid || f.in_domain) {
    g.contains_ellipsoid = [base, back, Ti](const Vec& c, const Mat& L, double radius) {
      return ellipsoid_in_domain(*base, back(c), Ti * L, radius).first;
    };
  }
  return g;
}

DerivativeCheck check_derivatives(const TargetPotential& f, const Vec& theta, const Vec& direction) {
  check_point(f, theta, "check_derivatives");
  DerivativeCheck out;
  const int d = f.dim;
  const double h = 1e-5 * (1.0 + theta.norm());
  const Vec g = f.gradient(theta);
  const Mat H = f.hessian(theta);

  Vec g_fd(d);
  Mat H_fd(d, d);
  for (int i = 0; i < d; ++i) {
    Vec tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    g_fd[i] = (f.value(tp) - f.value(tm)) / (2.0 * h);
    H_fd.col(i) = (f.gradient(tp) - f.gradient(tm)) / (2.0 * h);
  }
  out.grad_rel_err = (g_fd - g).norm() / std::max(g.norm(), 1.0);
  out.hess_rel_err = (H_fd - H).norm() / std::max(H.norm(), 1.0);
  out.hess_asymmetry = (H - H.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
  out.min_hess_eig = es.eigenvalues().minCoeff();

  if (f.third_directional) {
    const Vec u = direction;
    const Vec tp = theta + h * u, tm = theta - h * u;
    const double fd = (u.dot(f.hessian(tp) * u) - u.dot(f.hessian(tm) * u)) / (2.0 * h);
    const double exact = f.third_directional(theta, u);
    out.third_rel_err = std::abs(fd - exact) / std::max(std::abs(exact), 1.0);
  }
  return out;
}

}  // namespace lapcert
