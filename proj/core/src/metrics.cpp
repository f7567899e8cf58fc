#include "lapcert/metrics.hpp"

#include "lapcert/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lapcert {

double sym_operator_norm(const Mat& S) {
  if (S.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double general_operator_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

MetricContext::MetricContext(const Mat& A) {
  if (A.rows() == 0 || A.rows() != A.cols()) {
    throw DimensionError("MetricContext: weighting matrix must be square and non-empty");
  }
  if (!A.allFinite()) throw std::invalid_argument("MetricContext: non-finite weighting matrix");
  const double scale = general_operator_norm(A);
  const double asym = general_operator_norm(A - A.transpose());
  if (asym > 1e-10 * std::max(scale, std::numeric_limits<double>::min())) {
    throw std::invalid_argument("MetricContext: weighting matrix is not symmetric");
  }
  A_ = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(A_);
  if (es.info() != Eigen::Success) throw ConvergenceError("MetricContext: eigensolver failed");
  const Vec& lam = es.eigenvalues();
  lambda_min_ = lam.minCoeff();
  lambda_max_ = lam.maxCoeff();
  if (!(lambda_min_ > 0.0) || lambda_min_ < 1e-12 * lambda_max_) {
    throw std::invalid_argument("MetricContext: weighting matrix is not positive definite (lambda_min=" +
                                std::to_string(lambda_min_) + ")");
  }
  const Mat& V = es.eigenvectors();
  sqrtA_ = V * lam.cwiseSqrt().asDiagonal() * V.transpose();
  invSqrtA_ = V * lam.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  invA_ = V * lam.cwiseInverse().asDiagonal() * V.transpose();
}

MetricContext MetricContext::identity(int dim) { return MetricContext(Mat::Identity(dim, dim)); }

double MetricContext::vec_norm(const Vec& u) const {
  require_dim(u.size(), dim(), "weighted_vec_norm");
  return (sqrtA_ * u).norm();
}

double MetricContext::dual_norm(const Vec& v) const {
  require_dim(v.size(), dim(), "weighted_dual_norm");
  return (invSqrtA_ * v).norm();
}

double weighted_vec_norm(const Vec& u, const MetricContext& ctx) { return ctx.vec_norm(u); }
double weighted_dual_norm(const Vec& v, const MetricContext& ctx) { return ctx.dual_norm(v); }

// ---------------------------------------------------------------------------

SymmetricKForm SymmetricKForm::vector(const Vec& v) {
  SymmetricKForm f;
  f.order_ = 1;
  f.dim_ = static_cast<int>(v.size());
  f.v1_ = v;
  return f;
}

SymmetricKForm SymmetricKForm::matrix(const Mat& S) {
  if (S.rows() != S.cols()) throw DimensionError("SymmetricKForm: matrix must be square");
  const double scale = S.cwiseAbs().maxCoeff();
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300)) {
    throw std::invalid_argument("SymmetricKForm: matrix is not symmetric");
  }
  SymmetricKForm f;
  f.order_ = 2;
  f.dim_ = static_cast<int>(S.rows());
  f.m2_ = 0.5 * (S + S.transpose());
  return f;
}

SymmetricKForm SymmetricKForm::tensor3(int dim, std::vector<double> coeffs) {
  const std::size_t d = static_cast<std::size_t>(dim);
  if (dim < 1 || coeffs.size() != d * d * d) {
    throw DimensionError("SymmetricKForm: 3-tensor needs dim^3 coefficients");
  }
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) { return coeffs[(i * d + j) * d + k]; };
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        const double c = at(i, j, k);
        const double worst = std::max({std::abs(c - at(i, k, j)), std::abs(c - at(j, i, k)),
                                       std::abs(c - at(j, k, i)), std::abs(c - at(k, i, j)),
                                       std::abs(c - at(k, j, i))});
        if (worst > 1e-10 * std::max(scale, 1e-300)) {
          throw std::invalid_argument("SymmetricKForm: 3-tensor is not symmetric");
        }
      }
  SymmetricKForm f;
  f.order_ = 3;
  f.dim_ = dim;
  f.t3_ = std::move(coeffs);
  return f;
}

SymmetricKForm SymmetricKForm::callable(int order, int dim, ValueFn value, GradFn grad) {
  if (order < 1 || order > 3) throw std::invalid_argument("SymmetricKForm: order must be 1, 2 or 3");
  if (dim < 1) throw DimensionError("SymmetricKForm: dim must be positive");
  if (!value || !grad) throw std::invalid_argument("SymmetricKForm: callable needs value and gradient");
  SymmetricKForm f;
  f.order_ = order;
  f.dim_ = dim;
  f.value_fn_ = std::move(value);
  f.grad_fn_ = std::move(grad);
  return f;
}

double SymmetricKForm::eval(const Vec& u) const {
  require_dim(u.size(), dim_, "SymmetricKForm::eval");
  if (value_fn_) return value_fn_(u);
  switch (order_) {
    case 1:
      return v1_.dot(u);
    case 2:
      return u.dot(m2_ * u);
    default: {
      const std::size_t d = static_cast<std::size_t>(dim_);
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double inner_i = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double* row = &t3_[(i * d + j) * d];
          double inner_j = 0.0;
          for (std::size_t k = 0; k < d; ++k) inner_j += row[k] * u[k];
          inner_i += inner_j * u[j];
        }
        acc += inner_i * u[i];
      }
      return acc;
    }
  }
}

Vec SymmetricKForm::grad(const Vec& u) const {
  require_dim(u.size(), dim_, "SymmetricKForm::grad");
  if (grad_fn_) return grad_fn_(u);
  switch (order_) {
    case 1:
      return v1_;
    case 2:
      return 2.0 * (m2_ * u);
    default: {
      const std::size_t d = static_cast<std::size_t>(dim_);
      Vec g = Vec::Zero(dim_);
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double* row = &t3_[(i * d + j) * d];
          double inner = 0.0;
          for (std::size_t k = 0; k < d; ++k) inner += row[k] * u[k];
          acc += inner * u[j];
        }
        g[i] = 3.0 * acc;
      }
      return g;
    }
  }
}

Vec SymmetricKForm::as_vector() const {
  if (order_ != 1) throw std::logic_error("SymmetricKForm::as_vector: order is not 1");
  if (!value_fn_) return v1_;
  return grad_fn_(Vec::Zero(dim_));
}

Mat SymmetricKForm::as_matrix() const {
  if (order_ != 2) throw std::logic_error("SymmetricKForm::as_matrix: order is not 2");
  if (!value_fn_) return m2_;
  // polarization
  Mat M(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    Vec ei = Vec::Unit(dim_, i);
    M(i, i) = value_fn_(ei);
    for (int j = 0; j < i; ++j) {
      Vec ej = Vec::Unit(dim_, j);
      M(i, j) = M(j, i) = 0.25 * (value_fn_(ei + ej) - value_fn_(ei - ej));
    }
  }
  return M;
}

double SymmetricKForm::symmetry_defect(std::uint64_t seed, int trials) const {
  if (order_ != 3 || t3_.empty()) return 0.0;
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, dim_ - 1);
  const std::size_t d = static_cast<std::size_t>(dim_);
  auto at = [&](int i, int j, int k) {
    return t3_[(static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)) * d +
               static_cast<std::size_t>(k)];
  };
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int i = pick(rng), j = pick(rng), k = pick(rng);
    const double c = at(i, j, k);
    worst = std::max({worst, std::abs(c - at(i, k, j)), std::abs(c - at(j, i, k)),
                      std::abs(c - at(j, k, i)), std::abs(c - at(k, i, j)), std::abs(c - at(k, j, i))});
  }
  return worst;
}

SymmetricKForm random_symmetric_3form(int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = static_cast<std::size_t>(dim);
  std::vector<double> t(d * d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j)
      for (std::size_t k = j; k < d; ++k) {
        const double c = normal(rng);
        const std::size_t idx[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
        for (const auto& p : idx) t[(p[0] * d + p[1]) * d + p[2]] = c;
      }
  return SymmetricKForm::tensor3(dim, std::move(t));
}

// ---------------------------------------------------------------------------

namespace {

struct AscentResult {
  double value;
  Vec z;
  bool converged;
  int iterations;
};

// Shifted symmetric power iteration on the whitened form T(z) = S(W z), |z| = 1.
AscentResult shifted_power_ascent(const SymmetricKForm& S, const Mat& W, Vec z, int max_iter,
                                  double tol) {
  auto value = [&](const Vec& zz) { return S.eval(W * zz); };
  auto grad = [&](const Vec& zz) { return Vec(W * S.grad(W * zz)); };
  z.normalize();
  double v = value(z);
  double alpha = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vec g = grad(z);
    Vec cand;
    double vc = 0.0;
    for (int tries = 0;; ++tries) {
      cand = g + alpha * z;
      const double nrm = cand.norm();
      if (nrm < 1e-300) {
        alpha = std::max(1.0, 2.0 * alpha);
        continue;
      }
      cand /= nrm;
      vc = value(cand);
      if (vc >= v - 1e-15 * std::max(1.0, std::abs(v)) || tries > 60) break;
      alpha = std::max(2.0 * alpha, g.norm());
    }
    const double step = (cand - z).norm();
    const double gain = vc - v;
    z = cand;
    v = vc;
    if (step < 1e-10 && std::abs(gain) <= tol * std::max(1.0, std::abs(v))) {
      return {v, z, true, it};
    }
  }
  return {v, z, false, max_iter};
}

}  // namespace

TensorNorm tensor_op_norm(const SymmetricKForm& S, const MetricContext& ctx, const NormOptions& opts) {
  require_dim(S.dim(), ctx.dim(), "tensor_op_norm");
  const int d = ctx.dim();
  const Mat& W = ctx.invSqrtA();
  TensorNorm out;
  switch (S.order()) {
    case 1: {
      const Vec v = S.as_vector();
      out.value = ctx.dual_norm(v);
      if (out.value > 0.0) {
        out.witness = ctx.inverse() * v / out.value;
      } else {
        out.witness = W * Vec::Unit(d, 0);
      }
      return out;
    }
    case 2: {
      const Mat M = W * S.as_matrix() * W;
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
      if (es.info() != Eigen::Success) throw ConvergenceError("tensor_op_norm: eigensolver failed");
      Eigen::Index idx = 0;
      es.eigenvalues().cwiseAbs().maxCoeff(&idx);
      const double lam = es.eigenvalues()(idx);
      out.witness = W * es.eigenvectors().col(idx);
      out.witness_sign = lam < 0.0 ? -1.0 : 1.0;
      out.value = out.witness_sign * S.eval(out.witness);
      return out;
    }
    case 3:
      break;
    default:
      throw std::invalid_argument("tensor_op_norm: only k <= 3 is supported");
  }

  if (d == 1) {
    const Vec w = W.col(0);
    const double val = S.eval(w);
    out.witness = val < 0.0 ? Vec(-w) : w;
    out.value = S.eval(out.witness);
    return out;
  }
  if (opts.mode == NormMode::exact) {
    throw std::invalid_argument("tensor_op_norm: exact mode is unavailable for k=3 with d>1");
  }
  if (opts.restarts < 1) throw std::invalid_argument("tensor_op_norm: restarts must be >= 1");

  Rng rng(opts.seed);
  bool have = false;
  for (int m = 0; m < opts.restarts; ++m) {
    const Vec z0 = uniform_sphere(rng, d);
    AscentResult res = shifted_power_ascent(S, W, z0, opts.max_iter, opts.tol);
    // ties resolved toward the earlier restart
    if (!have || res.value > out.value) {
      have = true;
      out.value = res.value;
      out.witness = W * res.z;
      out.converged = res.converged;
    }
    out.iterations += res.iterations;
  }
  out.value = S.eval(out.witness);
  if (out.value < 0.0) {
    // all restarts ended at a negative stationary point; flip for the odd form
    out.witness = -out.witness;
    out.value = -out.value;
  }
  return out;
}

namespace {

// Visit points of the unit sphere S^{d-1} on a hyperspherical angle grid.
template <class F>
void for_each_sphere_point(int d, int res, F&& visit) {
  if (d == 1) {
    Vec z(1);
    z[0] = 1.0;
    visit(z);
    z[0] = -1.0;
    visit(z);
    return;
  }
  const int polar = d - 2;  // angles in [0, pi]
  std::vector<int> idx(static_cast<std::size_t>(d - 1), 0);
  std::vector<int> limits(static_cast<std::size_t>(d - 1), res + 1);
  limits.back() = 2 * res;  // azimuth in [0, 2pi)
  Vec z(d);
  while (true) {
    double sprod = 1.0;
    for (int a = 0; a < polar; ++a) {
      const double phi = std::numbers::pi * idx[static_cast<std::size_t>(a)] / res;
      z[a] = sprod * std::cos(phi);
      sprod *= std::sin(phi);
    }
    const double phi = std::numbers::pi * idx.back() / res;
    z[d - 2] = sprod * std::cos(phi);
    z[d - 1] = sprod * std::sin(phi);
    visit(z);
    int a = d - 2;
    while (a >= 0) {
      auto ua = static_cast<std::size_t>(a);
      if (++idx[ua] < limits[ua]) break;
      idx[ua] = 0;
      --a;
    }
    if (a < 0) break;
  }
}

}  // namespace

double tensor_op_norm_bruteforce(const SymmetricKForm& S, const MetricContext& ctx, int grid_resolution) {
  require_dim(S.dim(), ctx.dim(), "tensor_op_norm_bruteforce");
  const int d = ctx.dim();
  if (d > 4) throw std::invalid_argument("tensor_op_norm_bruteforce: dimension above 4");
  if (grid_resolution < 2) throw std::invalid_argument("tensor_op_norm_bruteforce: resolution too small");
  const Mat& W = ctx.invSqrtA();
  const bool even = S.order() % 2 == 0;
  double best = 0.0;
  for_each_sphere_point(d, grid_resolution, [&](const Vec& z) {
    const double v = S.eval(W * z);
    best = std::max(best, even ? std::abs(v) : v);
  });
  return best;
}

}  // namespace lapcert
