#pragma once

#include "lapcert/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace lapcert {

/// SPD weighting matrix A with cached symmetric square roots.
/// |u|_A = |A^{1/2} u|, dual norm ||v||_A = |A^{-1/2} v|.
class MetricContext {
 public:
  explicit MetricContext(const Mat& A);
  static MetricContext identity(int dim);

  int dim() const { return static_cast<int>(A_.rows()); }
  const Mat& A() const { return A_; }
  const Mat& sqrtA() const { return sqrtA_; }
  const Mat& invSqrtA() const { return invSqrtA_; }
  const Mat& inverse() const { return invA_; }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }

  double vec_norm(const Vec& u) const;
  double dual_norm(const Vec& v) const;

 private:
  Mat A_, sqrtA_, invSqrtA_, invA_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

double weighted_vec_norm(const Vec& u, const MetricContext& ctx);
double weighted_dual_norm(const Vec& v, const MetricContext& ctx);

/// Operator norm of a symmetric matrix (largest |eigenvalue|).
double sym_operator_norm(const Mat& S);

/// Symmetric k-linear form, k in {1,2,3}, stored densely or as a callable.
class SymmetricKForm {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;

  static SymmetricKForm vector(const Vec& v);
  /// Throws if S is not symmetric to 1e-10 relative.
  static SymmetricKForm matrix(const Mat& S);
  /// Row-major coefficients T[i*d*d + j*d + k]; throws if not permutation-invariant.
  static SymmetricKForm tensor3(int dim, std::vector<double> coeffs);
  /// value(u) = <S, u^k>, grad(u) = k S[u^{k-1}, .]
  static SymmetricKForm callable(int order, int dim, ValueFn value, GradFn grad);

  int order() const { return order_; }
  int dim() const { return dim_; }
  bool is_dense() const { return !value_fn_; }

  double eval(const Vec& u) const;
  Vec grad(const Vec& u) const;

  /// k=1 coefficient vector.
  Vec as_vector() const;
  /// k=2 coefficient matrix (recovered by polarization for callables).
  Mat as_matrix() const;
  /// k=3 dense coefficients (empty for callables).
  const std::vector<double>& coefficients() const { return t3_; }

  /// Worst permutation asymmetry over random index triples (dense k=3 only, else 0).
  double symmetry_defect(std::uint64_t seed, int trials = 200) const;

 private:
  SymmetricKForm() = default;
  int order_ = 0;
  int dim_ = 0;
  Vec v1_;
  Mat m2_;
  std::vector<double> t3_;
  ValueFn value_fn_;
  GradFn grad_fn_;
};

/// Random symmetric 3-form with N(0,1)-driven entries (symmetrized).
SymmetricKForm random_symmetric_3form(int dim, std::uint64_t seed);

enum class NormMode { exact, multistart };

struct NormOptions {
  NormMode mode = NormMode::multistart;
  int restarts = 32;
  std::uint64_t seed = 0x5eed;
  int max_iter = 1000;
  double tol = 1e-13;
};

struct TensorNorm {
  double value = 0.0;
  /// Unit vector in the A-metric with witness_sign * <S, u^k> == value.
  Vec witness;
  /// Only -1 for k=2 when the extreme eigenvalue is negative.
  double witness_sign = 1.0;
  bool converged = true;
  int iterations = 0;
};

TensorNorm tensor_op_norm(const SymmetricKForm& S, const MetricContext& ctx,
                          const NormOptions& opts = {});

/// Dense angular grid over the A-unit sphere. For validation only; d <= 4.
double tensor_op_norm_bruteforce(const SymmetricKForm& S, const MetricContext& ctx,
                                 int grid_resolution);

}  // namespace lapcert
