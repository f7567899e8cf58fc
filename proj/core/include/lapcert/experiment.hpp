#pragma once

#include "lapcert/bvm.hpp"
#include "lapcert/glm.hpp"
#include "lapcert/laplace.hpp"
#include "lapcert/pmf.hpp"
#include "lapcert/prior.hpp"
#include "lapcert/tv.hpp"
#include "lapcert/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lapcert {

struct PriorConfig {
  std::string kind = "flat";  // flat | gaussian | student_t
  Vec mu;                     // empty: theta*
  Mat sigma;                  // empty: scale * I
  double scale = 1.0;
  double nu = 3.0;
};

/// Model description shared by all experiments.
struct ModelSpec {
  /// cubic_radial | ones_cubic | quadratic | logistic | poisson | gaussian_link | exponential | pmf
  std::string model;
  int d = 1;
  double n = 100.0;
  Vec theta_star;  // GLM: length d; pmf: length d+1 with the reference state first
  std::string design = "gaussian";  // gaussian | identity | explicit
  Mat design_matrix;
  int support = 0;  // > 0: gaussian design with `support` distinct rows, each repeated n/support times
  std::vector<long long> counts;  // pmf: fixed counts instead of sampling
  Mat Q;                          // quadratic
  Vec a;                          // quadratic
  bool random_affine = false;     // synthetic models: push forward through a random affine map per replication
  PriorConfig prior;
  std::uint64_t seed = 1;

  bool is_glm() const;
  bool is_pmf() const { return model == "pmf"; }
  bool is_synthetic() const { return !is_glm() && !is_pmf(); }
};

enum class ExperimentKind { certify, bvm, events, sweep, tv };
std::string to_string(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::certify;
  ModelSpec model;
  std::vector<double> s_values{12.0};
  RStrategy r_strategy = RStrategy::fixed(6.0);
  int replications = 1;
  std::uint64_t seed = 1;
  Vec start;  // empty: default per model family
  // TV measurement: quadrature | mc | none
  std::string tv_method = "quadrature";
  QuadratureOptions quadrature;
  McOptions mc;
  int pair_budget = 200;
  Delta3Options delta3;
  // sweep
  std::vector<double> sweep_n;
  std::vector<int> sweep_d;
  ExperimentKind sweep_pipeline = ExperimentKind::certify;
  // tv: target Gaussian, "laplace" or "bvm" or "explicit"
  std::string tv_gaussian = "laplace";
  Vec gaussian_mean;
  Mat gaussian_cov;
};

/// Throws ConfigError on malformed or inconsistent input.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct RunRecord {
  long long run_id = 0;
  std::string model;
  int d = 0;
  double n = 0.0;
  double s = 0.0;  // NaN when not applicable
  std::uint64_t seed = 0;
  std::string event_flags;
  double mle_dist_Fstar = 0.0;
  double tv_measured = 0.0;
  double tv_err = 0.0;
  double bound_laplace = 0.0;
  double bound_prior = 0.0;
  double bound_gauss = 0.0;
  double bound_total = 0.0;
  std::string soundness;
  double elapsed_ms = 0.0;

  bool violation = false;
  bool error() const { return soundness.rfind("error:", 0) == 0; }
};

struct SlopeFit {
  std::string name;
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  int points = 0;
};

struct FrequencyRow {
  std::string model;
  double s = 0.0;
  std::string event;
  long long hits = 0;
  long long total = 0;
  double freq = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double floor = 0.0;     // NaN when no closed-form floor exists
  double fitted_c = 0.0;  // NaN unless an exponent was fitted
  bool violation = false;
};

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<SlopeFit> slopes;
  std::vector<FrequencyRow> frequencies;
  std::vector<std::string> violations;
};

ExperimentResult run_certify(const ExperimentConfig& cfg, int jobs = 1);
ExperimentResult run_bvm(const ExperimentConfig& cfg, int jobs = 1);
ExperimentResult run_events(const ExperimentConfig& cfg, int jobs = 1);
ExperimentResult run_sweep(const ExperimentConfig& cfg, int jobs = 1);
ExperimentResult run_tv(const ExperimentConfig& cfg, int jobs = 1);
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

/// Model construction from a spec; `replication_seed` drives labels or counts.
TargetPotential build_synthetic(const ModelSpec& spec, std::uint64_t replication_seed, Vec* mode_hint = nullptr);
GlmModel build_glm(const ModelSpec& spec, std::uint64_t replication_seed);
PmfModel build_pmf(const ModelSpec& spec, std::uint64_t replication_seed);
PriorSpec build_prior(const ModelSpec& spec);

extern const std::vector<std::string> kCsvColumns;
/// 17 significant digits, '.' separator, empty for NaN.
std::string format_double(double x);
std::string records_to_csv(const std::vector<RunRecord>& records, bool include_elapsed = true);
std::string summary_json(const ExperimentResult& result);
/// Log-log plot of median TV and bound against n for each d.
std::string sweep_svg(const ExperimentResult& result);

struct Interval {
  double lo = 0.0, hi = 0.0;
};
Interval wilson_interval(long long hits, long long total, double z = 1.959963984540054);

/// Ordinary least squares y = a + b x with the standard error of b; needs >= 3 points.
SlopeFit ols_slope(const std::vector<double>& x, const std::vector<double>& y, std::string name = {});

}  // namespace lapcert
