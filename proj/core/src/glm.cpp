#include "lapcert/glm.hpp"

#include "lapcert/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <queue>

namespace lapcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logistic_d3(double t) {
  const double s = sigmoid(t);
  return s * (1.0 - s) * (1.0 - 2.0 * s);
}

// location of the extrema of psi''' for the logistic link, log(2 + sqrt 3)
const double kLogisticPeak = std::log(2.0 + std::sqrt(3.0));

}  // namespace

double logistic_d3_sup() { return 1.0 / (6.0 * std::sqrt(3.0)); }

LinkFamily make_link(LinkKind kind) {
  LinkFamily L;
  L.kind = kind;
  switch (kind) {
    case LinkKind::logistic:
      L.name = "logistic";
      L.psi = [](double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); };
      L.d1 = sigmoid;
      L.d2 = [](double t) {
        const double s = sigmoid(t);
        return s * (1.0 - s);
      };
      L.d3 = logistic_d3;
      L.in_omega = [](double t) { return std::isfinite(t); };
      L.max_abs_d3 = [](double a, double b) {
        double m = std::max(std::abs(logistic_d3(a)), std::abs(logistic_d3(b)));
        if ((a <= kLogisticPeak && kLogisticPeak <= b) || (a <= -kLogisticPeak && -kLogisticPeak <= b)) {
          m = std::max(m, logistic_d3_sup());
        }
        return m;
      };
      L.log_concave_base = false;
      break;
    case LinkKind::poisson:
      L.name = "poisson";
      L.psi = [](double t) { return std::exp(t); };
      L.d1 = L.psi;
      L.d2 = L.psi;
      L.d3 = L.psi;
      L.in_omega = [](double t) { return std::isfinite(t); };
      L.max_abs_d3 = [](double, double b) { return std::exp(b); };
      break;
    case LinkKind::gaussian:
      L.name = "gaussian";
      L.psi = [](double t) { return 0.5 * t * t; };
      L.d1 = [](double t) { return t; };
      L.d2 = [](double) { return 1.0; };
      L.d3 = [](double) { return 0.0; };
      L.in_omega = [](double t) { return std::isfinite(t); };
      L.max_abs_d3 = [](double, double) { return 0.0; };
      L.log_concave_base = true;
      break;
    case LinkKind::exponential:
      L.name = "exponential";
      L.psi = [](double t) { return -std::log(-t); };
      L.d1 = [](double t) { return -1.0 / t; };
      L.d2 = [](double t) { return 1.0 / (t * t); };
      L.d3 = [](double t) { return -2.0 / (t * t * t); };
      L.in_omega = [](double t) { return t < 0.0; };
      L.max_abs_d3 = [](double, double b) { return b < 0.0 ? 2.0 / std::pow(-b, 3) : kInf; };
      L.log_concave_base = true;
      break;
    case LinkKind::custom:
      throw std::invalid_argument("make_link: use make_custom_link for custom links");
  }
  return L;
}

LinkFamily make_link(std::string_view name) {
  if (name == "logistic") return make_link(LinkKind::logistic);
  if (name == "poisson") return make_link(LinkKind::poisson);
  if (name == "gaussian") return make_link(LinkKind::gaussian);
  if (name == "exponential") return make_link(LinkKind::exponential);
  throw ConfigError("unknown link family '" + std::string(name) + "'");
}

LinkFamily make_custom_link(std::string name, std::function<double(double)> psi,
                            std::function<double(double)> d1, std::function<double(double)> d2,
                            std::function<double(double)> d3, std::function<bool(double)> in_omega,
                            std::function<double(double, double)> max_abs_d3) {
  if (!psi || !d1 || !d2 || !d3 || !in_omega) {
    throw std::invalid_argument("make_custom_link: psi, its derivatives and Omega are required");
  }
  LinkFamily L;
  L.kind = LinkKind::custom;
  L.name = std::move(name);
  L.psi = std::move(psi);
  L.d1 = std::move(d1);
  L.d2 = std::move(d2);
  L.d3 = std::move(d3);
  L.in_omega = std::move(in_omega);
  L.max_abs_d3 = std::move(max_abs_d3);
  return L;
}

Design gaussian_design(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("gaussian_design: n and d must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Design D;
  D.X.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) D.X(i, j) = normal(rng);
  D.weights = Vec::Ones(n);
  D.n = n;
  return D;
}

Design gaussian_support_design(int support, int d, long long replicates, std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("gaussian_support_design: replicates must be positive");
  Design D = gaussian_design(support, d, seed);
  D.weights = Vec::Constant(support, static_cast<double>(replicates));
  D.n = static_cast<double>(support) * static_cast<double>(replicates);
  return D;
}

Design identity_design(int d, double n) {
  if (d < 1 || !(n > 0.0)) throw std::invalid_argument("identity_design: d and n must be positive");
  Design D;
  D.X = Mat::Identity(d, d);
  D.weights = Vec::Constant(d, n);
  D.n = n;
  D.identity = true;
  return D;
}

Design explicit_design(const Mat& X) {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("explicit_design: empty matrix");
  Design D;
  D.X = X;
  D.weights = Vec::Ones(X.rows());
  D.n = static_cast<double>(X.rows());
  return D;
}

Vec glm_sample(const LinkFamily& link, const Design& design, const Vec& theta_star, std::uint64_t seed) {
  require_dim(theta_star.size(), design.X.cols(), "glm_sample");
  if (link.kind == LinkKind::custom) {
    throw std::invalid_argument("glm_sample: no sampler for custom link '" + link.name + "'");
  }
  Rng rng(seed);
  const Eigen::Index m = design.X.rows();
  Vec y(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double omega = design.X.row(r).dot(theta_star);
    if (!link.in_omega(omega)) throw DomainError("glm_sample: x^T theta* outside Omega");
    const double w = design.weights[r];
    // each row carries w i.i.d. observations; rows of a random design have w = 1
    const auto count = static_cast<long long>(std::llround(w));
    if (count < 1 || std::abs(w - static_cast<double>(count)) > 1e-9) {
      throw std::invalid_argument("glm_sample: row weights must be positive integers");
    }
    switch (link.kind) {
      case LinkKind::logistic: {
        std::binomial_distribution<long long> dist(count, sigmoid(omega));
        y[r] = static_cast<double>(dist(rng)) / w;
        break;
      }
      case LinkKind::poisson: {
        std::poisson_distribution<long long> dist(w * std::exp(omega));
        y[r] = static_cast<double>(dist(rng)) / w;
        break;
      }
      case LinkKind::gaussian: {
        std::normal_distribution<double> dist(omega, 1.0 / std::sqrt(w));
        y[r] = dist(rng);
        break;
      }
      case LinkKind::exponential: {
        // sum of w exponentials with rate -omega
        std::gamma_distribution<double> dist(w, 1.0 / (-omega));
        y[r] = dist(rng) / w;
        break;
      }
      case LinkKind::custom:
        break;
    }
  }
  return y;
}

// ---------------------------------------------------------------------------

namespace {

struct Cell {
  double ub;
  double a0, a1, b0, b1;  // angle ranges; d=2 uses only [a0, a1]
  bool operator<(const Cell& o) const { return ub < o.ub; }
};

}  // namespace

CubicSup sup_abs_cubic_sum(const Mat& Z, const Vec& coef, double rel_tol, int max_cells) {
  require_dim(coef.size(), Z.rows(), "sup_abs_cubic_sum");
  const int d = static_cast<int>(Z.cols());
  if ((coef.array() < 0.0).any()) throw std::invalid_argument("sup_abs_cubic_sum: negative coefficient");
  CubicSup out;
  if (!coef.allFinite()) {
    out.upper = kInf;
    out.lower = 0.0;
    out.witness = Vec::Unit(d, 0);
    return out;
  }
  const Vec znorm = Z.rowwise().norm();
  auto h = [&](const Vec& w) {
    const Vec p = Z * w;
    return (coef.array() * p.array().abs().cube()).sum();
  };
  auto h_ub = [&](const Vec& w, double delta) {
    const Vec p = Z * w;
    return (coef.array() * (p.array().abs() + znorm.array() * delta).cube()).sum();
  };

  if (d == 1) {
    out.witness = Vec::Ones(1);
    out.lower = out.upper = h(out.witness);
    out.refined = true;
    return out;
  }

  if (d > 3) {
    const Mat G = Z.transpose() * (Z.array().colwise() * coef.array()).matrix();
    out.upper = znorm.maxCoeff() * sym_operator_norm(G);
    // lower value by convex ascent w <- grad/|grad|
    Rng rng(0x0c0b1c);
    out.lower = -1.0;
    for (int m = 0; m < 16; ++m) {
      Vec w = uniform_sphere(rng, d);
      for (int it = 0; it < 200; ++it) {
        const Vec p = Z * w;
        const Vec g = Z.transpose() * (coef.array() * p.array().abs() * p.array()).matrix();
        if (g.norm() < 1e-300) break;
        const Vec wn = g.normalized();
        const bool done = (wn - w).norm() < 1e-12;
        w = wn;
        if (done) break;
      }
      const double v = h(w);
      if (v > out.lower) {
        out.lower = v;
        out.witness = w;
      }
    }
    return out;
  }

  auto point = [d](const Cell& c) {
    Vec w(d);
    if (d == 2) {
      const double phi = 0.5 * (c.a0 + c.a1);
      w << std::cos(phi), std::sin(phi);
    } else {
      const double th = 0.5 * (c.a0 + c.a1), ph = 0.5 * (c.b0 + c.b1);
      w << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
    }
    return w;
  };
  // geodesic radius of the cell around its center point
  auto radius = [d](const Cell& c) {
    if (d == 2) return 0.5 * (c.a1 - c.a0);
    return 0.5 * (c.a1 - c.a0) + 0.5 * std::sin(c.a1) * (c.b1 - c.b0);
  };

  std::priority_queue<Cell> queue;
  int evals = 0;
  out.lower = -1.0;
  auto push = [&](Cell c, double parent_ub) {
    const Vec w = point(c);
    const double v = h(w);
    ++evals;
    if (v > out.lower) {
      out.lower = v;
      out.witness = w;
    }
    c.ub = std::min(parent_ub, h_ub(w, radius(c)));
    queue.push(c);
  };

  // |z^T w|^3 is even in w, so a half circle / hemisphere covers the sphere
  if (d == 2) {
    constexpr int k0 = 32;
    for (int i = 0; i < k0; ++i) {
      push({0.0, std::numbers::pi * i / k0, std::numbers::pi * (i + 1) / k0, 0.0, 0.0}, kInf);
    }
  } else {
    constexpr int kt = 8, kp = 32;
    for (int i = 0; i < kt; ++i)
      for (int j = 0; j < kp; ++j) {
        push({0.0, 0.5 * std::numbers::pi * i / kt, 0.5 * std::numbers::pi * (i + 1) / kt,
              2.0 * std::numbers::pi * j / kp, 2.0 * std::numbers::pi * (j + 1) / kp},
             kInf);
      }
  }

  while (evals < max_cells) {
    const Cell top = queue.top();
    if (top.ub <= out.lower * (1.0 + rel_tol) + 1e-300) {
      out.refined = true;
      break;
    }
    queue.pop();
    if (d == 2) {
      const double mid = 0.5 * (top.a0 + top.a1);
      push({0.0, top.a0, mid, 0.0, 0.0}, top.ub);
      push({0.0, mid, top.a1, 0.0, 0.0}, top.ub);
    } else {
      const double mt = 0.5 * (top.a0 + top.a1), mp = 0.5 * (top.b0 + top.b1);
      push({0.0, top.a0, mt, top.b0, mp}, top.ub);
      push({0.0, top.a0, mt, mp, top.b1}, top.ub);
      push({0.0, mt, top.a1, top.b0, mp}, top.ub);
      push({0.0, mt, top.a1, mp, top.b1}, top.ub);
    }
  }
  out.upper = std::max(out.lower, queue.top().ub);
  return out;
}

// ---------------------------------------------------------------------------

GlmModel::GlmModel(LinkFamily link, Design design, Vec theta_star, Vec labels)
    : link_(std::move(link)), design_(std::move(design)), theta_star_(std::move(theta_star)),
      labels_(std::move(labels)) {
  const Eigen::Index m = design_.X.rows();
  if (m == 0 || design_.X.cols() == 0) throw DimensionError("GlmModel: empty design");
  require_dim(theta_star_.size(), design_.X.cols(), "GlmModel theta_star");
  require_dim(design_.weights.size(), m, "GlmModel weights");
  require_dim(labels_.size(), m, "GlmModel labels");
  if (!(design_.n > 0.0)) throw std::invalid_argument("GlmModel: n must be positive");
  if ((design_.weights.array() <= 0.0).any()) throw std::invalid_argument("GlmModel: weights must be positive");
  if (!link_.psi) throw std::invalid_argument("GlmModel: link family is not initialized");
  if (!in_domain(theta_star_)) throw DomainError("GlmModel: theta* outside the parameter domain");
  Eigen::ColPivHouseholderQR<Mat> qr(design_.X);
  if (qr.rank() < design_.X.cols()) {
    warnings_.push_back("design rows do not span R^d; the Hessian may be singular");
  }
  b_ = design_.X.transpose() * (design_.weights.array() * labels_.array()).matrix() / design_.n;
}

GlmModel GlmModel::with_labels(Vec labels) const {
  GlmModel copy = *this;
  require_dim(labels.size(), design_.X.rows(), "GlmModel::with_labels");
  copy.labels_ = std::move(labels);
  copy.b_ = design_.X.transpose() * (design_.weights.array() * copy.labels_.array()).matrix() / design_.n;
  return copy;
}

Vec GlmModel::eta(const Vec& theta) const {
  require_dim(theta.size(), dim(), "GlmModel");
  Vec e = design_.X * theta;
  for (Eigen::Index r = 0; r < e.size(); ++r) {
    if (!link_.in_omega(e[r])) throw DomainError("GlmModel: x^T theta outside Omega");
  }
  return e;
}

bool GlmModel::in_domain(const Vec& theta) const {
  if (theta.size() != dim() || !theta.allFinite()) return false;
  const Vec e = design_.X * theta;
  for (Eigen::Index r = 0; r < e.size(); ++r)
    if (!link_.in_omega(e[r])) return false;
  return true;
}

double GlmModel::value(const Vec& theta) const {
  const Vec e = eta(theta);
  double acc = 0.0;
  for (Eigen::Index r = 0; r < e.size(); ++r) acc += design_.weights[r] * link_.psi(e[r]);
  return acc / design_.n - b_.dot(theta);
}

Vec GlmModel::gradient(const Vec& theta) const {
  const Vec e = eta(theta);
  Vec s(e.size());
  for (Eigen::Index r = 0; r < e.size(); ++r) s[r] = design_.weights[r] * link_.d1(e[r]);
  return design_.X.transpose() * s / design_.n - b_;
}

Mat GlmModel::hessian(const Vec& theta) const {
  const Vec e = eta(theta);
  Vec s(e.size());
  for (Eigen::Index r = 0; r < e.size(); ++r) s[r] = design_.weights[r] * link_.d2(e[r]) / design_.n;
  Mat H = design_.X.transpose() * (design_.X.array().colwise() * s.array()).matrix();
  return 0.5 * (H + H.transpose());
}

NllEval GlmModel::eval(const Vec& theta) const {
  return {value(theta), gradient(theta), hessian(theta)};
}

double GlmModel::third_directional(const Vec& theta, const Vec& u) const {
  const Vec e = eta(theta);
  const Vec p = design_.X * u;
  double acc = 0.0;
  for (Eigen::Index r = 0; r < e.size(); ++r) acc += design_.weights[r] * link_.d3(e[r]) * p[r] * p[r] * p[r];
  return acc / design_.n;
}

Vec GlmModel::third_contract(const Vec& theta, const Vec& u) const {
  const Vec e = eta(theta);
  const Vec p = design_.X * u;
  Vec s(e.size());
  for (Eigen::Index r = 0; r < e.size(); ++r) s[r] = design_.weights[r] * link_.d3(e[r]) * p[r] * p[r];
  return design_.X.transpose() * s / design_.n;
}

Mat GlmModel::fisher() const { return hessian(theta_star_); }

bool GlmModel::fisher_singular() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(fisher(), Eigen::EigenvaluesOnly);
  const Vec& lam = es.eigenvalues();
  return !(lam.minCoeff() > 1e-12 * std::max(lam.maxCoeff(), 1e-300));
}

bool GlmModel::contains_ellipsoid(const Vec& center, const Mat& L, double radius) const {
  require_dim(center.size(), dim(), "GlmModel::contains_ellipsoid");
  const Vec c = design_.X * center;
  const Vec half = (design_.X * L).rowwise().norm() * radius;
  // Omega is an interval, so checking both ends of each row's range is exact
  for (Eigen::Index r = 0; r < c.size(); ++r) {
    if (!link_.in_omega(c[r] - half[r]) || !link_.in_omega(c[r] + half[r])) return false;
  }
  return true;
}

CubicSup GlmModel::third_norm_bound(const Vec& center, const MetricContext& A, double radius) const {
  require_dim(center.size(), dim(), "GlmModel::third_norm_bound");
  if (!link_.max_abs_d3) {
    throw std::logic_error("third_norm_bound: link '" + link_.name + "' has no bound on |psi'''|");
  }
  const Mat Z = design_.X * A.invSqrtA();
  const Vec zn = Z.rowwise().norm();
  const Vec c = design_.X * center;
  Vec coef(c.size());
  for (Eigen::Index r = 0; r < c.size(); ++r) {
    const double m = link_.max_abs_d3(c[r] - radius * zn[r], c[r] + radius * zn[r]);
    coef[r] = design_.weights[r] * m / design_.n;
  }
  return sup_abs_cubic_sum(Z, coef);
}

TargetPotential GlmModel::potential() const {
  auto self = std::make_shared<const GlmModel>(*this);
  TargetPotential f;
  f.name = "glm_" + link_.name;
  f.dim = dim();
  f.n = n();
  f.convex = true;
  f.in_domain = [self](const Vec& t) { return self->in_domain(t); };
  f.value = [self](const Vec& t) { return self->value(t); };
  f.gradient = [self](const Vec& t) { return self->gradient(t); };
  f.hessian = [self](const Vec& t) { return self->hessian(t); };
  f.third_directional = [self](const Vec& t, const Vec& u) { return self->third_directional(t, u); };
  f.third_contract = [self](const Vec& t, const Vec& u) { return self->third_contract(t, u); };
  if (link_.max_abs_d3) {
    f.delta3_certified = [self](const Vec& mode, const MetricContext& H, double radius) {
      return self->third_norm_bound(mode, H, radius).upper;
    };
  }
  f.contains_ellipsoid = [self](const Vec& c, const Mat& L, double radius) {
    return self->contains_ellipsoid(c, L, radius);
  };
  return f;
}

NllEval glm_nll(const GlmModel& model, const Vec& theta) { return model.eval(theta); }

Mat glm_fisher(const GlmModel& model) { return model.fisher(); }

}  // namespace lapcert
