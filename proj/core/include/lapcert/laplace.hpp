#pragma once

#include "lapcert/metrics.hpp"
#include "lapcert/potential.hpp"
#include "lapcert/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lapcert {

struct NewtonOptions {
  int max_iter = 200;
  /// Converged when the Newton decrement |grad|_{H^{-1}} <= tol * sqrt(d).
  double tol = 1e-10;
  /// Iterates with |theta| beyond this are treated as divergence.
  double max_norm = 1e8;
};

/// Mode, Hessian there, and the Gaussian N(mode, (n H)^{-1}).
struct LaplaceFit {
  Vec mode;
  Mat H;
  double n = 1.0;
  int iterations = 0;
  double grad_norm = 0.0;          // Euclidean, at the mode
  double grad_norm_H = 0.0;        // dual H-norm, at the mode
  double initial_grad_norm = 0.0;  // Euclidean, at the start point

  int dim() const { return static_cast<int>(mode.size()); }
  Mat covariance() const;
  Mat precision() const { return n * H; }
};

LaplaceFit find_mode(const TargetPotential& f, const Vec& start, const NewtonOptions& opts = {});
/// Laplace approximation at a known mode (no iterations); throws unless H is positive definite.
LaplaceFit laplace_at(const TargetPotential& f, const Vec& mode);

enum class Delta3Mode { analytic, certified_bound, empirical };
std::string to_string(Delta3Mode m);

struct Delta3Report {
  double r = 0.0;
  Delta3Mode mode = Delta3Mode::empirical;
  double value = 0.0;
  Vec witness_theta;      // empirical mode only
  Vec witness_direction;  // unit in the H-metric; empirical mode only
  int samples = 0;
};

struct Delta3Options {
  int budget = 2000;
  std::uint64_t seed = 0xde17a3;
  /// Use a potential-supplied certified bound when no analytic value exists.
  bool use_certified = true;
  /// Skip analytic and certified values and always search.
  bool force_empirical = false;
  int refine_starts = 5;
};

/// delta_3(r) = sup over U(r) of ||D^2 f(theta) - H||_H / |theta - mode|_H.
Delta3Report estimate_delta3(const TargetPotential& f, const LaplaceFit& fit, double r,
                             const Delta3Options& opts = {});
/// The ratio above at a single point, with the eigen-witness direction.
double delta3_ratio(const TargetPotential& f, const LaplaceFit& fit, const Vec& theta, Vec* direction = nullptr);

enum class Soundness { certified, heuristic, invalid };
std::string to_string(Soundness s);

struct Certificate {
  double r = 0.0;
  double delta3 = 0.0;
  Delta3Mode delta3_mode = Delta3Mode::empirical;
  double laplace_term = 0.0;  // delta3 d / sqrt(2n)
  double tail_term = 0.0;     // 3 exp(-d r^2 / 9)
  double total = 0.0;         // min(1, sum)
  bool r_at_least_6 = false;
  bool neighborhood_in_domain = false;
  bool neighborhood_check_exact = true;
  bool delta3_condition = false;  // r delta3 sqrt(d/n) <= 1/2
  bool convex = false;
  Soundness soundness = Soundness::invalid;
};

Certificate certify(const TargetPotential& f, const LaplaceFit& fit, double r, const Delta3Report& delta3);

struct RStrategy {
  enum class Kind { fixed, uniform_bound, scan } kind = Kind::fixed;
  double r = 6.0;
  double M = 1.0;
  std::vector<double> grid;

  static RStrategy fixed(double r);
  static RStrategy uniform_bound(double M);
  static RStrategy scan(std::vector<double> grid);
};

double choose_r(const TargetPotential& f, const LaplaceFit& fit, const RStrategy& strategy,
                const Delta3Options& opts = {});

struct EmpiricalCertificate {
  double local_term = 0.0;
  double local_se = 0.0;
  double tail_term = 0.0;
  double total = 0.0;
  int accepted = 0;
  int proposed = 0;
  int hessian_violations = 0;  // samples with D^2 f not above H/2
};

EmpiricalCertificate empirical_certificate(const TargetPotential& f, const LaplaceFit& fit, double r,
                                           int mc_samples, std::uint64_t seed);

struct GrowthReport {
  int probes = 0;
  int skipped = 0;  // probes outside the domain
  int growth_violations = 0;
  double min_growth_ratio = 0.0;
  int hessian_probes = 0;
  int hessian_violations = 0;
  double min_hessian_ratio = 0.0;  // lambda_min(H^{-1/2} D^2 f H^{-1/2}), compare to 1/2
};

GrowthReport check_growth_bound(const TargetPotential& f, const LaplaceFit& fit, double r, int probes,
                                std::uint64_t seed = 0x6a0);

}  // namespace lapcert
