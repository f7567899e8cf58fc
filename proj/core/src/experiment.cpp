#include "lapcert/experiment.hpp"

#include "lapcert/metrics.hpp"
#include "lapcert/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace lapcert {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

const std::set<std::string> kModels{"cubic_radial", "ones_cubic", "quadratic", "logistic",
                                    "poisson",      "gaussian_link", "exponential", "pmf"};

[[noreturn]] void config_fail(const std::string& msg) { throw ConfigError("config: " + msg); }

double get_number(const json& j, const char* key) {
  if (!j.at(key).is_number()) config_fail(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

Vec parse_vec(const json& j, const char* what) {
  if (!j.is_array()) config_fail(std::string(what) + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) config_fail(std::string(what) + " must contain numbers only");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Mat parse_mat(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) config_fail(std::string(what) + " must be a nonempty array of rows");
  const std::size_t cols = j[0].size();
  Mat M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) config_fail(std::string(what) + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) config_fail(std::string(what) + " must contain numbers only");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return M;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) config_fail(std::string("unknown key '") + it.key() + "' in " + where);
  }
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "certify") return ExperimentKind::certify;
  if (s == "bvm") return ExperimentKind::bvm;
  if (s == "events") return ExperimentKind::events;
  if (s == "sweep") return ExperimentKind::sweep;
  if (s == "tv") return ExperimentKind::tv;
  config_fail("unknown experiment '" + s + "'");
}

void validate_model(ModelSpec& m) {
  if (!kModels.count(m.model)) config_fail("unknown model '" + m.model + "'");
  if (m.d < 1) config_fail("d must be >= 1");
  if (!(m.n > 0.0) || !std::isfinite(m.n)) config_fail("n must be positive");
  if (m.is_pmf()) {
    if (m.theta_star.size() == 0) m.theta_star = Vec::Constant(m.d + 1, 1.0 / (m.d + 1));
    if (m.theta_star.size() != m.d + 1) config_fail("pmf theta_star must have d+1 entries");
    if ((m.theta_star.array() <= 0.0).any() || std::abs(m.theta_star.sum() - 1.0) > 1e-12) {
      config_fail("pmf theta_star must be strictly positive and sum to 1");
    }
    if (std::floor(m.n) != m.n) config_fail("pmf n must be an integer");
    if (!m.counts.empty()) {
      if (static_cast<int>(m.counts.size()) != m.d + 1) config_fail("pmf counts must have d+1 entries");
      long long tot = 0;
      for (long long c : m.counts) tot += c;
      if (static_cast<double>(tot) != m.n) config_fail("pmf counts must sum to n");
    }
  } else if (m.is_glm()) {
    if (m.theta_star.size() == 0) {
      m.theta_star = m.model == "exponential" ? Vec::Constant(m.d, -1.0) : Vec::Zero(m.d);
    }
    if (m.theta_star.size() != m.d) config_fail("theta_star must have d entries");
    if (m.design == "explicit") {
      if (m.design_matrix.cols() != m.d) config_fail("explicit design must have d columns");
      m.n = static_cast<double>(m.design_matrix.rows());
    } else if (m.design == "gaussian") {
      if (std::floor(m.n) != m.n) config_fail("GLM n must be an integer");
      if (m.support > 0 && std::fmod(m.n, m.support) != 0.0) config_fail("support must divide n");
    } else if (m.design != "identity") {
      config_fail("design must be 'gaussian', 'identity' or a matrix");
    }
  } else if (m.model == "quadratic") {
    if (m.Q.size() == 0) m.Q = Mat::Identity(m.d, m.d);
    if (m.a.size() == 0) m.a = Vec::Zero(m.d);
    if (m.Q.rows() != m.d || m.Q.cols() != m.d || m.a.size() != m.d) config_fail("quadratic Q/a dimensions");
  }
  const PriorConfig& p = m.prior;
  if (p.kind != "flat" && p.kind != "gaussian" && p.kind != "student_t") config_fail("unknown prior '" + p.kind + "'");
  if (p.kind != "flat" && m.is_synthetic()) config_fail("priors apply to GLM and pmf models only");
  if (p.mu.size() && p.mu.size() != m.d) config_fail("prior mu must have d entries");
  if (p.sigma.size() && (p.sigma.rows() != m.d || p.sigma.cols() != m.d)) config_fail("prior sigma must be d x d");
  if (!(p.scale > 0.0) || !(p.nu > 0.0)) config_fail("prior scale and nu must be positive");
}

ModelSpec parse_model(const json& j, std::uint64_t default_seed) {
  if (!j.is_object()) config_fail("'model' must be an object");
  check_keys(j, {"model", "d", "n", "theta_star", "design", "support", "counts", "Q", "a", "random_affine", "prior", "seed"},
             "model");
  ModelSpec m;
  if (!j.contains("model") || !j["model"].is_string()) config_fail("model.model is required");
  m.model = j["model"].get<std::string>();
  if (j.contains("d")) {
    if (!j["d"].is_number_integer()) config_fail("d must be an integer");
    m.d = j["d"].get<int>();
  }
  if (j.contains("n")) m.n = get_number(j, "n");
  if (j.contains("theta_star")) m.theta_star = parse_vec(j["theta_star"], "theta_star");
  if (j.contains("design")) {
    if (j["design"].is_string()) {
      m.design = j["design"].get<std::string>();
    } else {
      m.design = "explicit";
      m.design_matrix = parse_mat(j["design"], "design");
    }
  }
  if (j.contains("support")) m.support = j["support"].get<int>();
  if (j.contains("counts")) m.counts = j["counts"].get<std::vector<long long>>();
  if (j.contains("Q")) m.Q = parse_mat(j["Q"], "Q");
  if (j.contains("a")) m.a = parse_vec(j["a"], "a");
  if (j.contains("random_affine")) m.random_affine = j["random_affine"].get<bool>();
  m.seed = j.contains("seed") ? j["seed"].get<std::uint64_t>() : default_seed;
  if (j.contains("prior")) {
    const json& p = j["prior"];
    if (!p.is_object()) config_fail("prior must be an object");
    check_keys(p, {"kind", "mu", "sigma", "scale", "nu"}, "prior");
    if (p.contains("kind")) m.prior.kind = p["kind"].get<std::string>();
    if (p.contains("mu")) m.prior.mu = parse_vec(p["mu"], "prior.mu");
    if (p.contains("sigma")) m.prior.sigma = parse_mat(p["sigma"], "prior.sigma");
    if (p.contains("scale")) m.prior.scale = get_number(p, "scale");
    if (p.contains("nu")) m.prior.nu = get_number(p, "nu");
  }
  validate_model(m);
  return m;
}

std::string error_code(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConvergenceError&) {
    return "error:convergence";
  } catch (const DomainError&) {
    return "error:domain";
  } catch (const DimensionError&) {
    return "error:dimension";
  } catch (const ConfigError&) {
    return "error:config";
  } catch (const std::invalid_argument&) {
    return "error:invalid_argument";
  } catch (const std::exception&) {
    return "error:runtime";
  } catch (...) {
    return "error:unknown";
  }
}

RunRecord blank_record(long long run_id, const ModelSpec& spec, std::uint64_t seed) {
  RunRecord r;
  r.run_id = run_id;
  r.model = spec.model;
  r.d = spec.d;
  r.n = spec.n;
  r.s = kNaN;
  r.seed = seed;
  r.mle_dist_Fstar = r.tv_measured = r.tv_err = kNaN;
  r.bound_laplace = r.bound_prior = r.bound_gauss = r.bound_total = kNaN;
  return r;
}

template <class Fill>
RunRecord guarded_row(long long run_id, const ModelSpec& spec, std::uint64_t seed, Fill&& fill) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec = blank_record(run_id, spec, seed);
  try {
    fill(rec);
  } catch (...) {
    const double s = rec.s;
    rec = blank_record(run_id, spec, seed);
    rec.s = s;
    rec.soundness = error_code(std::current_exception());
  }
  rec.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

template <class Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  jobs = std::clamp(jobs, 1, std::max(1, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct TvValue {
  double value = kNaN, err = kNaN;
  bool reliable = true;
};

TvValue measure_tv(const TargetPotential& f, const Gaussian& g, const ExperimentConfig& cfg, std::uint64_t seed) {
  TvValue out;
  if (cfg.tv_method == "none") return out;
  TvEstimate e;
  if (cfg.tv_method == "quadrature" && g.dim() <= 3) {
    e = tv_quadrature(f, g, cfg.quadrature);
  } else {
    McOptions mo = cfg.mc;
    mo.seed = derive_seed(seed, "tv_mc");
    e = tv_mc(f, g, mo);
  }
  out.value = e.value;
  out.err = e.error;
  out.reliable = e.reliable;
  return out;
}

Vec pmf_free(const ModelSpec& spec) { return spec.theta_star.tail(spec.d); }

std::string flag(bool b) { return b ? "1" : "0"; }

std::string event_string(const EventReport& e) {
  std::string s = "E1:" + flag(e.E1) + "|E2:" + flag(e.E2) + "|E3:" + flag(e.E3);
  if (e.has_E0) s += "|E0:" + flag(e.E0);
  return s;
}

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---- certify ----------------------------------------------------------------------------

RunRecord certify_row(const ExperimentConfig& cfg, const ModelSpec& spec, long long run_id, std::uint64_t seed) {
  return guarded_row(run_id, spec, seed, [&](RunRecord& rec) {
    TargetPotential f;
    LaplaceFit fit;
    Vec start = cfg.start;
    if (spec.is_synthetic()) {
      f = build_synthetic(spec, seed);
      if (start.size() == 0) start = Vec::Zero(spec.d);
      fit = find_mode(f, start);
    } else if (spec.is_glm()) {
      const GlmModel m = build_glm(spec, seed);
      f = make_posterior(m.potential(), build_prior(spec));
      if (start.size() == 0) start = m.theta_star();
      fit = find_mode(f, start);
      rec.mle_dist_Fstar = MetricContext(m.fisher()).vec_norm(fit.mode - m.theta_star());
    } else {
      const PmfModel m = build_pmf(spec, seed);
      if (m.mle_on_boundary()) throw DomainError("zero count: MLE on the simplex boundary");
      f = make_posterior(m.potential(), build_prior(spec));
      fit = spec.prior.kind == "flat" && start.size() == 0 ? compute_mle(m) : find_mode(f, start.size() ? start : m.nbar());
      rec.mle_dist_Fstar = MetricContext(m.fisher()).vec_norm(fit.mode - m.theta_star());
    }
    const double r = choose_r(f, fit, cfg.r_strategy, cfg.delta3);
    Delta3Report d3;
    try {
      d3 = estimate_delta3(f, fit, r, cfg.delta3);
    } catch (const DomainError&) {
      d3.r = r;
      d3.value = kInf;  // U(r) leaves the domain; certify flags it
    }
    const Certificate c = certify(f, fit, r, d3);
    const TvValue tv = measure_tv(f, laplace_gaussian(fit), cfg, seed);
    rec.tv_measured = tv.value;
    rec.tv_err = tv.err;
    rec.bound_laplace = c.laplace_term;
    rec.bound_prior = 0.0;
    rec.bound_gauss = 0.0;
    rec.bound_total = c.total;
    rec.soundness = to_string(c.soundness);
    rec.violation = c.soundness == Soundness::certified && std::isfinite(tv.value) && tv.value > c.total + tv.err;
  });
}

// ---- bvm / events -----------------------------------------------------------------------

// Label-independent GLM quantities at one s, computed once per design.
struct GlmCache {
  double delta3_s = 0.0, delta3_2s = 0.0;
  double lipschitz = 0.0;
  int pairs = 0;
  bool neighborhood = true;
  PriorQuantities prior;
};

GlmCache glm_cache(const ExperimentConfig& cfg, const ModelSpec& spec, double s) {
  GlmCache c;
  const GlmModel m = build_glm(spec, derive_seed(cfg.seed, "glm_cache"));
  const MetricContext F(m.fisher());
  c.neighborhood = ellipsoid_in_domain(m.potential(), m.theta_star(), F.invSqrtA(), ustar_radius(2.0 * s, m.dim(), m.n())).first;
  if (c.neighborhood) {
    c.delta3_s = delta3_star_glm(m, s, 0).certified;
    c.delta3_2s = delta3_star_glm(m, 2.0 * s, 0).certified;
    const EventReport e = check_events(m.potential(), m.fisher(), m.theta_star(), s, 0.0, c.delta3_2s, cfg.pair_budget,
                                       derive_seed(cfg.seed, "glm_pairs"));
    c.lipschitz = e.lipschitz;
    c.pairs = e.pairs;
  } else {
    c.delta3_s = c.delta3_2s = kInf;
  }
  c.prior = prior_quantities(build_prior(spec), m.fisher(), m.theta_star(), 2.0 * s, m.n());
  return c;
}

EventReport glm_events(const GlmModel& m, const GlmCache& c, double s, std::uint64_t seed) {
  if (!c.neighborhood) throw DomainError("U*(2s) leaves the parameter domain");
  // the Hessian is label-free, so the pairwise ratio from the cache applies to every replication
  EventReport e = check_events(m.potential(), m.fisher(), m.theta_star(), s, 0.0, c.delta3_2s, 0, seed);
  e.lipschitz = c.lipschitz;
  e.pairs = c.pairs;
  e.E3 = e.lipschitz <= c.delta3_2s;
  return e;
}

RunRecord bvm_row(const ExperimentConfig& cfg, const ModelSpec& spec, double s, const GlmCache* cache, long long run_id,
                  std::uint64_t seed) {
  return guarded_row(run_id, spec, seed, [&](RunRecord& rec) {
    rec.s = s;
    const int d = spec.d;
    BvmContext ctx;
    ctx.d = d;
    ctx.s = s;
    EventReport ev;
    bool have_events = true;
    LaplaceFit fit;
    Mat Fstar;
    Vec theta_star;
    TargetPotential post;
    if (spec.is_glm()) {
      const GlmModel m = build_glm(spec, seed);
      ctx.n = m.n();
      Fstar = m.fisher();
      theta_star = m.theta_star();
      ev = glm_events(m, *cache, s, seed);
      fit = compute_mle(m, cfg.start.size() ? cfg.start : theta_star);
      ctx.eps2 = 0.0;
      ctx.delta3_s = cache->delta3_s;
      ctx.delta3_2s = cache->delta3_2s;
      ctx.prior = cache->prior;
      ctx.neighborhood_in_domain = cache->neighborhood;
      post = make_posterior(m.potential(), build_prior(spec));
    } else if (spec.is_pmf()) {
      const PmfModel m = build_pmf(spec, seed);
      ctx.n = m.n();
      Fstar = m.fisher();
      theta_star = m.theta_star();
      fit = compute_mle(m);
      const MetricContext F(Fstar);
      ctx.eps2 = std::sqrt(s * s * d / (m.n() * m.theta_min()));
      ctx.neighborhood_in_domain =
          ellipsoid_in_domain(m.potential(), theta_star, F.invSqrtA(), ustar_radius(2.0 * s, d, m.n())).first;
      const double d3 = pmf_containment_holds(m, s) ? delta3_star_pmf(m, s).certified : kInf;
      ctx.delta3_s = ctx.delta3_2s = d3;
      ctx.prior = prior_quantities(build_prior(spec), Fstar, theta_star, 2.0 * s, m.n());
      try {
        ev = check_events(m, s, cfg.pair_budget, seed);
      } catch (const DomainError&) {
        have_events = false;
      }
      post = make_posterior(m.potential(), build_prior(spec));
    } else {
      throw ConfigError("bvm runs need a GLM or pmf model");
    }
    rec.n = ctx.n;
    rec.mle_dist_Fstar = MetricContext(Fstar).vec_norm(fit.mode - theta_star);
    rec.event_flags = have_events ? event_string(ev) : "n/a";
    const BvmBound b = bvm_bound(ctx);
    rec.bound_laplace = b.laplace();
    rec.bound_prior = b.prior();
    rec.bound_gauss = b.gauss;
    rec.bound_total = b.total;
    const bool applies = b.valid() && have_events && ev.all();
    rec.soundness = applies ? "certified" : "invalid";
    const TvValue tv = measure_tv(post, bvm_gaussian_target(fit.mode, Fstar, ctx.n), cfg, seed);
    rec.tv_measured = tv.value;
    rec.tv_err = tv.err;
    const bool contained = rec.mle_dist_Fstar <= ustar_radius(s, d, ctx.n) * (1.0 + 1e-12);
    rec.violation = applies && ((b.total < 1.0 && std::isfinite(tv.value) && tv.value > b.total + tv.err) || !contained);
  });
}

RunRecord events_row(const ExperimentConfig& cfg, const ModelSpec& spec, double s, const GlmCache* cache, long long run_id,
                     std::uint64_t seed) {
  return guarded_row(run_id, spec, seed, [&](RunRecord& rec) {
    rec.s = s;
    EventReport ev;
    if (spec.is_glm()) {
      ev = glm_events(build_glm(spec, seed), *cache, s, seed);
    } else if (spec.is_pmf()) {
      ev = check_events(build_pmf(spec, seed), s, cfg.pair_budget, seed);
    } else {
      throw ConfigError("events runs need a GLM or pmf model");
    }
    rec.event_flags = event_string(ev);
  });
}

bool parse_flag(const std::string& flags, const std::string& name, bool* value) {
  const auto pos = flags.find(name + ":");
  if (pos == std::string::npos) return false;
  *value = flags[pos + name.size() + 1] == '1';
  return true;
}

std::vector<FrequencyRow> frequencies(const ModelSpec& spec, double s, const std::vector<RunRecord>& rows) {
  std::vector<FrequencyRow> out;
  std::vector<std::string> names{"E1", "E2", "E3"};
  if (spec.is_pmf()) names.push_back("E0");
  names.push_back("all");
  for (const std::string& name : names) {
    FrequencyRow fr;
    fr.model = spec.model;
    fr.s = s;
    fr.event = name;
    fr.floor = kNaN;
    fr.fitted_c = kNaN;
    for (const RunRecord& r : rows) {
      if (r.error() || r.event_flags == "n/a" || r.event_flags.empty()) continue;
      bool v = true;
      if (name == "all") {
        bool e;
        for (const char* k : {"E1", "E2", "E3"}) v = v && parse_flag(r.event_flags, k, &e) && e;
      } else if (!parse_flag(r.event_flags, name, &v)) {
        continue;
      }
      ++fr.total;
      if (v) ++fr.hits;
    }
    if (fr.total == 0) continue;
    fr.freq = static_cast<double>(fr.hits) / fr.total;
    const Interval w = wilson_interval(fr.hits, fr.total);
    fr.wilson_lo = w.lo;
    fr.wilson_hi = w.hi;
    const double sd = s * s * spec.d;
    if (name == "E1" && spec.is_glm()) {
      fr.floor = -std::expm1(-sd / 10.0);
      fr.violation = fr.freq + 0.5 * (w.hi - w.lo) < fr.floor;
    }
    if (name == "E0" && fr.hits < fr.total && sd > 0.0) {
      // P(E0^c) <= exp(-C s^2 d)  =>  C = -log(freq of E0^c) / (s^2 d)
      fr.fitted_c = -std::log(1.0 - fr.freq) / sd;
    }
    out.push_back(fr);
  }
  return out;
}

void collect_violations(ExperimentResult& res) {
  for (const RunRecord& r : res.records) {
    if (r.violation) res.violations.push_back("run " + std::to_string(r.run_id) + ": measured TV exceeds the bound");
  }
  for (const FrequencyRow& f : res.frequencies) {
    if (f.violation) {
      res.violations.push_back(f.model + " s=" + format_double(f.s) + ": " + f.event + " frequency below its floor");
    }
  }
}

ModelSpec resized(const ModelSpec& base, int d, double n) {
  ModelSpec m = base;
  if (m.d != d) {
    m.d = d;
    m.theta_star.resize(0);
    m.prior.mu.resize(0);
    m.prior.sigma.resize(0, 0);
    m.Q.resize(0, 0);
    m.a.resize(0);
    m.counts.clear();
  }
  if (m.n != n) m.counts.clear();
  m.n = n;
  validate_model(m);
  return m;
}

}  // namespace

// ---- public -----------------------------------------------------------------------------

bool ModelSpec::is_glm() const {
  return model == "logistic" || model == "poisson" || model == "gaussian_link" || model == "exponential";
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::certify:
      return "certify";
    case ExperimentKind::bvm:
      return "bvm";
    case ExperimentKind::events:
      return "events";
    case ExperimentKind::sweep:
      return "sweep";
    case ExperimentKind::tv:
      return "tv";
  }
  return "unknown";
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    config_fail(std::string("invalid JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) config_fail("top level must be an object");
    check_keys(j, {"experiment", "model", "s", "r", "r_strategy", "replications", "seed", "start", "tv", "quadrature", "mc",
                   "pair_budget", "delta3", "sweep", "gaussian"},
               "config");
    ExperimentConfig c;
    if (!j.contains("experiment") || !j["experiment"].is_string()) config_fail("'experiment' is required");
    c.kind = parse_kind(j["experiment"].get<std::string>());
    if (!j.contains("seed") || !j["seed"].is_number_unsigned()) config_fail("'seed' (nonnegative integer) is required");
    c.seed = j["seed"].get<std::uint64_t>();
    if (!j.contains("model")) config_fail("'model' is required");
    c.model = parse_model(j["model"], c.seed);
    if (j.contains("s")) {
      c.s_values = j["s"].is_array() ? j["s"].get<std::vector<double>>() : std::vector<double>{get_number(j, "s")};
      if (c.s_values.empty()) config_fail("s must not be empty");
      for (double s : c.s_values)
        if (!(s >= 0.0)) config_fail("s must be nonnegative");
    }
    if (j.contains("r")) c.r_strategy = RStrategy::fixed(get_number(j, "r"));
    if (j.contains("r_strategy")) {
      const json& rs = j["r_strategy"];
      check_keys(rs, {"kind", "r", "M", "grid"}, "r_strategy");
      const std::string kind = rs.value("kind", "fixed");
      if (kind == "fixed") {
        c.r_strategy = RStrategy::fixed(rs.value("r", 6.0));
      } else if (kind == "uniform_bound") {
        c.r_strategy = RStrategy::uniform_bound(rs.value("M", 1.0));
      } else if (kind == "scan") {
        if (!rs.contains("grid")) config_fail("scan needs a grid");
        c.r_strategy = RStrategy::scan(rs["grid"].get<std::vector<double>>());
        if (c.r_strategy.grid.empty()) config_fail("scan grid must not be empty");
      } else {
        config_fail("unknown r_strategy kind '" + kind + "'");
      }
    }
    if (j.contains("replications")) {
      if (!j["replications"].is_number_integer() || j["replications"].get<long long>() < 1) {
        config_fail("replications must be an integer >= 1");
      }
      c.replications = j["replications"].get<int>();
    }
    if (j.contains("start")) c.start = parse_vec(j["start"], "start");
    if (c.start.size() && c.start.size() != c.model.d) config_fail("start must have d entries");
    if (j.contains("tv")) {
      c.tv_method = j["tv"].get<std::string>();
      if (c.tv_method != "quadrature" && c.tv_method != "mc" && c.tv_method != "none") config_fail("tv must be quadrature|mc|none");
    }
    if (j.contains("quadrature")) {
      const json& q = j["quadrature"];
      check_keys(q, {"radius_mult", "grid"}, "quadrature");
      c.quadrature.radius_mult = q.value("radius_mult", c.quadrature.radius_mult);
      c.quadrature.grid = q.value("grid", c.quadrature.grid);
      if (!(c.quadrature.radius_mult > 0.0) || c.quadrature.grid < 0) config_fail("bad quadrature options");
    }
    if (j.contains("mc")) {
      const json& q = j["mc"];
      check_keys(q, {"samples", "blocks", "min_ess"}, "mc");
      c.mc.samples = q.value("samples", c.mc.samples);
      c.mc.blocks = q.value("blocks", c.mc.blocks);
      c.mc.min_ess = q.value("min_ess", c.mc.min_ess);
      if (c.mc.blocks < 2 || c.mc.samples < 2LL * c.mc.blocks) config_fail("mc needs samples >= 2 * blocks >= 4");
    }
    if (j.contains("pair_budget")) c.pair_budget = j["pair_budget"].get<int>();
    if (j.contains("delta3")) {
      const json& q = j["delta3"];
      check_keys(q, {"budget", "seed", "use_certified", "force_empirical"}, "delta3");
      c.delta3.budget = q.value("budget", c.delta3.budget);
      c.delta3.seed = q.value("seed", c.delta3.seed);
      c.delta3.use_certified = q.value("use_certified", c.delta3.use_certified);
      c.delta3.force_empirical = q.value("force_empirical", c.delta3.force_empirical);
    }
    if (j.contains("sweep")) {
      const json& q = j["sweep"];
      check_keys(q, {"n", "d", "pipeline"}, "sweep");
      if (q.contains("n")) c.sweep_n = q["n"].get<std::vector<double>>();
      if (q.contains("d")) c.sweep_d = q["d"].get<std::vector<int>>();
      if (q.contains("pipeline")) c.sweep_pipeline = parse_kind(q["pipeline"].get<std::string>());
      if (c.sweep_pipeline != ExperimentKind::certify && c.sweep_pipeline != ExperimentKind::bvm) {
        config_fail("sweep pipeline must be certify or bvm");
      }
    }
    if (c.kind == ExperimentKind::sweep) {
      const auto distinct_n = std::set<double>(c.sweep_n.begin(), c.sweep_n.end()).size();
      const auto distinct_d = std::set<int>(c.sweep_d.begin(), c.sweep_d.end()).size();
      if (distinct_n < 3 && distinct_d < 3) config_fail("sweep needs at least 3 grid points in n or d");
      for (double n : c.sweep_n)
        if (!(n > 0.0)) config_fail("sweep n must be positive");
      for (int d : c.sweep_d)
        if (d < 1) config_fail("sweep d must be >= 1");
    }
    if ((c.kind == ExperimentKind::bvm || c.kind == ExperimentKind::events ||
         (c.kind == ExperimentKind::sweep && c.sweep_pipeline == ExperimentKind::bvm)) &&
        c.model.is_synthetic()) {
      config_fail("bvm and events experiments need a GLM or pmf model");
    }
    if (j.contains("gaussian")) {
      const json& g = j["gaussian"];
      if (g.is_string()) {
        c.tv_gaussian = g.get<std::string>();
        if (c.tv_gaussian != "laplace" && c.tv_gaussian != "bvm") config_fail("gaussian must be laplace|bvm|{mean,cov}");
        if (c.tv_gaussian == "bvm" && c.model.is_synthetic()) config_fail("gaussian 'bvm' needs a GLM or pmf model");
      } else {
        check_keys(g, {"mean", "cov"}, "gaussian");
        c.tv_gaussian = "explicit";
        c.gaussian_mean = parse_vec(g.at("mean"), "gaussian.mean");
        c.gaussian_cov = parse_mat(g.at("cov"), "gaussian.cov");
        if (c.gaussian_mean.size() != c.model.d || c.gaussian_cov.rows() != c.model.d || c.gaussian_cov.cols() != c.model.d) {
          config_fail("gaussian mean/cov dimensions");
        }
      }
    }
    return c;
  } catch (const json::exception& e) {
    config_fail(std::string("bad value: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

TargetPotential build_synthetic(const ModelSpec& spec, std::uint64_t replication_seed, Vec* mode_hint) {
  TargetPotential f;
  Vec mode = Vec::Zero(spec.d);
  if (spec.model == "cubic_radial") {
    f = make_cubic_radial(spec.d, spec.n);
  } else if (spec.model == "ones_cubic") {
    f = make_ones_cubic(spec.d, spec.n);
  } else if (spec.model == "quadratic") {
    f = make_quadratic(spec.Q.size() ? spec.Q : Mat::Identity(spec.d, spec.d),
                       spec.a.size() ? spec.a : Vec::Zero(spec.d), spec.n);
    if (spec.a.size()) mode = spec.a;
  } else {
    throw ConfigError("config: '" + spec.model + "' is not a synthetic model");
  }
  if (spec.random_affine) {
    Rng rng(derive_seed(replication_seed, "affine"));
    Mat T;
    for (int attempt = 0;; ++attempt) {
      T = Mat::Identity(spec.d, spec.d);
      for (int i = 0; i < spec.d; ++i)
        for (int k = 0; k < spec.d; ++k) T(i, k) += 0.5 * standard_normal(rng, 1)[0];
      Eigen::JacobiSVD<Mat> svd(T);
      const Vec sv = svd.singularValues();
      if (sv.minCoeff() > 0.0 && sv.maxCoeff() / sv.minCoeff() < 50.0) break;
      if (attempt > 100) throw std::runtime_error("build_synthetic: no well-conditioned affine map found");
    }
    const Vec b = standard_normal(rng, spec.d);
    f = affine_pushforward(f, T, b);
    mode = T * mode + b;
  }
  if (mode_hint) *mode_hint = mode;
  return f;
}

GlmModel build_glm(const ModelSpec& spec, std::uint64_t replication_seed) {
  const LinkFamily link = make_link(spec.model == "gaussian_link" ? std::string_view("gaussian") : std::string_view(spec.model));
  Design design;
  if (spec.design == "explicit") {
    design = explicit_design(spec.design_matrix);
  } else if (spec.design == "identity") {
    design = identity_design(spec.d, spec.n);
  } else if (spec.support > 0) {
    design = gaussian_support_design(spec.support, spec.d, static_cast<long long>(spec.n) / spec.support, spec.seed);
  } else {
    design = gaussian_design(static_cast<int>(spec.n), spec.d, spec.seed);
  }
  Vec labels = glm_sample(link, design, spec.theta_star, replication_seed);
  return GlmModel(link, std::move(design), spec.theta_star, std::move(labels));
}

PmfModel build_pmf(const ModelSpec& spec, std::uint64_t replication_seed) {
  if (!spec.counts.empty()) return PmfModel(spec.counts, spec.theta_star);
  return PmfModel(pmf_sample(spec.theta_star, static_cast<long long>(spec.n), replication_seed), spec.theta_star);
}

PriorSpec build_prior(const ModelSpec& spec) {
  const PriorConfig& p = spec.prior;
  if (p.kind == "flat") return PriorSpec::flat(spec.d);
  const Vec mu = p.mu.size() ? p.mu : (spec.is_pmf() ? pmf_free(spec) : spec.theta_star);
  const Mat sigma = p.sigma.size() ? p.sigma : Mat(p.scale * Mat::Identity(spec.d, spec.d));
  if (p.kind == "gaussian") return PriorSpec::gaussian(mu, sigma);
  return PriorSpec::student_t(p.nu, mu, sigma);
}

ExperimentResult run_certify(const ExperimentConfig& cfg, int jobs) {
  ExperimentResult res;
  res.records.resize(static_cast<std::size_t>(cfg.replications));
  parallel_for(cfg.replications, jobs, [&](int i) {
    res.records[static_cast<std::size_t>(i)] =
        certify_row(cfg, cfg.model, i, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
  });
  collect_violations(res);
  return res;
}

ExperimentResult run_bvm(const ExperimentConfig& cfg, int jobs) {
  ExperimentResult res;
  const int R = cfg.replications;
  for (std::size_t k = 0; k < cfg.s_values.size(); ++k) {
    const double s = cfg.s_values[k];
    GlmCache cache;
    if (cfg.model.is_glm()) cache = glm_cache(cfg, cfg.model, s);
    std::vector<RunRecord> rows(static_cast<std::size_t>(R));
    parallel_for(R, jobs, [&](int i) {
      const long long id = static_cast<long long>(k) * R + i;
      rows[static_cast<std::size_t>(i)] =
          bvm_row(cfg, cfg.model, s, &cache, id, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    });
    auto fr = frequencies(cfg.model, s, rows);
    res.frequencies.insert(res.frequencies.end(), fr.begin(), fr.end());
    res.records.insert(res.records.end(), rows.begin(), rows.end());
  }
  collect_violations(res);
  return res;
}

ExperimentResult run_events(const ExperimentConfig& cfg, int jobs) {
  ExperimentResult res;
  const int R = cfg.replications;
  for (std::size_t k = 0; k < cfg.s_values.size(); ++k) {
    const double s = cfg.s_values[k];
    GlmCache cache;
    if (cfg.model.is_glm()) cache = glm_cache(cfg, cfg.model, s);
    std::vector<RunRecord> rows(static_cast<std::size_t>(R));
    parallel_for(R, jobs, [&](int i) {
      const long long id = static_cast<long long>(k) * R + i;
      rows[static_cast<std::size_t>(i)] =
          events_row(cfg, cfg.model, s, &cache, id, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    });
    auto fr = frequencies(cfg.model, s, rows);
    res.frequencies.insert(res.frequencies.end(), fr.begin(), fr.end());
    res.records.insert(res.records.end(), rows.begin(), rows.end());
  }
  // E0 exponent across s values: regress log P(E0^c) on s^2 d
  if (cfg.model.is_pmf()) {
    std::vector<double> x, y;
    for (const FrequencyRow& f : res.frequencies) {
      if (f.event == "E0" && f.hits < f.total) {
        x.push_back(f.s * f.s * cfg.model.d);
        y.push_back(std::log(1.0 - f.freq));
      }
    }
    if (x.size() >= 3) {
      SlopeFit sf = ols_slope(x, y, "E0_tail_exponent");
      sf.slope = -sf.slope;  // report C in exp(-C s^2 d)
      res.slopes.push_back(sf);
    }
  }
  collect_violations(res);
  return res;
}

ExperimentResult run_sweep(const ExperimentConfig& cfg, int jobs) {
  ExperimentResult res;
  const std::vector<int> ds = cfg.sweep_d.empty() ? std::vector<int>{cfg.model.d} : cfg.sweep_d;
  const std::vector<double> ns = cfg.sweep_n.empty() ? std::vector<double>{cfg.model.n} : cfg.sweep_n;
  const int R = cfg.replications;
  const double s = cfg.s_values.front();
  struct Point {
    int d;
    double n;
    double tv, bound, laplace;
  };
  std::vector<Point> points;
  long long next_id = 0;
  for (int d : ds) {
    for (double n : ns) {
      const ModelSpec spec = resized(cfg.model, d, n);
      GlmCache cache;
      if (cfg.sweep_pipeline == ExperimentKind::bvm && spec.is_glm()) cache = glm_cache(cfg, spec, s);
      std::vector<RunRecord> rows(static_cast<std::size_t>(R));
      parallel_for(R, jobs, [&](int i) {
        const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)),
                                               static_cast<std::uint64_t>(next_id));
        rows[static_cast<std::size_t>(i)] = cfg.sweep_pipeline == ExperimentKind::bvm
                                                ? bvm_row(cfg, spec, s, &cache, next_id + i, seed)
                                                : certify_row(cfg, spec, next_id + i, seed);
      });
      next_id += R;
      std::vector<double> tv, bound, lap;
      for (const RunRecord& r : rows) {
        tv.push_back(r.tv_measured);
        bound.push_back(r.bound_total);
        lap.push_back(r.bound_laplace);
      }
      points.push_back({d, n, median(tv), median(bound), median(lap)});
      res.records.insert(res.records.end(), rows.begin(), rows.end());
    }
  }
  // log median of one column against log n or log d; saturated bounds (== 1) are skipped
  auto fit_group = [&](bool by_n, const std::string& label, auto in_group) {
    auto fit = [&](const char* prefix, double Point::*col, bool below_one) {
      std::vector<double> x, y;
      for (const Point& p : points) {
        const double v = p.*col;
        if (!in_group(p) || !std::isfinite(v) || v <= 0.0 || (below_one && v >= 1.0)) continue;
        x.push_back(std::log(by_n ? p.n : static_cast<double>(p.d)));
        y.push_back(std::log(v));
      }
      if (x.size() >= 3) res.slopes.push_back(ols_slope(x, y, prefix + label));
    };
    fit("tv_", &Point::tv, false);
    fit("bound_", &Point::bound, true);
    fit("laplace_", &Point::laplace, false);
  };
  if (std::set<double>(ns.begin(), ns.end()).size() >= 3) {
    for (int d : std::set<int>(ds.begin(), ds.end())) {
      fit_group(true, "vs_n[d=" + std::to_string(d) + "]", [d](const Point& p) { return p.d == d; });
    }
  }
  if (std::set<int>(ds.begin(), ds.end()).size() >= 3) {
    for (double n : std::set<double>(ns.begin(), ns.end())) {
      fit_group(false, "vs_d[n=" + format_double(n) + "]", [n](const Point& p) { return p.n == n; });
    }
  }
  collect_violations(res);
  return res;
}

ExperimentResult run_tv(const ExperimentConfig& cfg, int jobs) {
  ExperimentResult res;
  res.records.resize(static_cast<std::size_t>(cfg.replications));
  parallel_for(cfg.replications, jobs, [&](int i) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    const ModelSpec& spec = cfg.model;
    res.records[static_cast<std::size_t>(i)] = guarded_row(i, spec, seed, [&](RunRecord& rec) {
      TargetPotential f;
      Vec start = cfg.start;
      Mat Fstar;
      if (spec.is_synthetic()) {
        f = build_synthetic(spec, seed);
        if (start.size() == 0) start = Vec::Zero(spec.d);
      } else if (spec.is_glm()) {
        const GlmModel m = build_glm(spec, seed);
        f = make_posterior(m.potential(), build_prior(spec));
        Fstar = m.fisher();
        if (start.size() == 0) start = m.theta_star();
      } else {
        const PmfModel m = build_pmf(spec, seed);
        f = make_posterior(m.potential(), build_prior(spec));
        Fstar = m.fisher();
        if (start.size() == 0) start = m.nbar();
      }
      Gaussian g;
      if (cfg.tv_gaussian == "explicit") {
        g = Gaussian{cfg.gaussian_mean, cfg.gaussian_cov};
      } else {
        const LaplaceFit fit = find_mode(f, start);
        g = cfg.tv_gaussian == "bvm" ? bvm_gaussian_target(fit.mode, Fstar, f.n) : laplace_gaussian(fit);
      }
      const TvValue tv = measure_tv(f, g, cfg, seed);
      rec.n = f.n;
      rec.tv_measured = tv.value;
      rec.tv_err = tv.err;
      if (!tv.reliable) rec.soundness = "unreliable";
    });
  });
  collect_violations(res);
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs) {
  switch (cfg.kind) {
    case ExperimentKind::certify:
      return run_certify(cfg, jobs);
    case ExperimentKind::bvm:
      return run_bvm(cfg, jobs);
    case ExperimentKind::events:
      return run_events(cfg, jobs);
    case ExperimentKind::sweep:
      return run_sweep(cfg, jobs);
    case ExperimentKind::tv:
      return run_tv(cfg, jobs);
  }
  throw ConfigError("config: unknown experiment");
}

// ---- output -----------------------------------------------------------------------------

const std::vector<std::string> kCsvColumns{"run_id",        "model",         "d",           "n",           "s",
                                           "seed",          "event_flags",   "mle_dist_Fstar", "tv_measured", "tv_err",
                                           "bound_laplace", "bound_prior",   "bound_gauss", "bound_total", "soundness",
                                           "elapsed_ms"};

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string records_to_csv(const std::vector<RunRecord>& records, bool include_elapsed) {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out += (i ? "," : "") + kCsvColumns[i];
  out += "\r\n";
  for (const RunRecord& r : records) {
    const std::vector<std::string> f{std::to_string(r.run_id),
                                     csv_field(r.model),
                                     std::to_string(r.d),
                                     format_double(r.n),
                                     format_double(r.s),
                                     std::to_string(r.seed),
                                     csv_field(r.event_flags),
                                     format_double(r.mle_dist_Fstar),
                                     format_double(r.tv_measured),
                                     format_double(r.tv_err),
                                     format_double(r.bound_laplace),
                                     format_double(r.bound_prior),
                                     format_double(r.bound_gauss),
                                     format_double(r.bound_total),
                                     csv_field(r.soundness),
                                     include_elapsed ? format_double(r.elapsed_ms) : std::string()};
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    out += "\r\n";
  }
  return out;
}

std::string summary_json(const ExperimentResult& result) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json j;
  j["slopes"] = json::array();
  for (const SlopeFit& s : result.slopes) {
    j["slopes"].push_back(
        {{"name", s.name}, {"slope", num(s.slope)}, {"stderr", num(s.stderr_)}, {"intercept", num(s.intercept)}, {"points", s.points}});
  }
  j["frequencies"] = json::array();
  for (const FrequencyRow& f : result.frequencies) {
    j["frequencies"].push_back({{"model", f.model},
                                {"s", num(f.s)},
                                {"event", f.event},
                                {"hits", f.hits},
                                {"total", f.total},
                                {"freq", num(f.freq)},
                                {"wilson_lo", num(f.wilson_lo)},
                                {"wilson_hi", num(f.wilson_hi)},
                                {"floor", num(f.floor)},
                                {"fitted_c", num(f.fitted_c)},
                                {"violation", f.violation}});
  }
  j["violations"] = {{"count", result.violations.size()}, {"details", result.violations}};
  return j.dump(2) + "\n";
}

std::string sweep_svg(const ExperimentResult& result) {
  // group medians by (d, n)
  std::map<int, std::map<double, std::pair<std::vector<double>, std::vector<double>>>> groups;
  for (const RunRecord& r : result.records) {
    auto& g = groups[r.d][r.n];
    g.first.push_back(r.tv_measured);
    g.second.push_back(r.bound_total);
  }
  struct Pt {
    double x, y;
  };
  std::vector<std::pair<std::string, std::vector<Pt>>> series;
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (auto& [d, byn] : groups) {
    std::vector<Pt> tv, bd;
    for (auto& [n, vals] : byn) {
      const double mt = median(vals.first), mb = median(vals.second);
      if (std::isfinite(mt) && mt > 0) tv.push_back({std::log10(n), std::log10(mt)});
      if (std::isfinite(mb) && mb > 0) bd.push_back({std::log10(n), std::log10(mb)});
    }
    for (const auto& v : {tv, bd})
      for (const Pt& p : v) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
      }
    series.push_back({"tv d=" + std::to_string(d), tv});
    series.push_back({"bound d=" + std::to_string(d), bd});
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double W = 640, H = 420, m = 50;
  auto X = [&](double x) { return m + (x - xmin) / (xmax - xmin) * (W - 2 * m); };
  auto Y = [&](double y) { return H - m - (y - ymin) / (ymax - ymin) * (H - 2 * m); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">log10 n</text>\n";
  o << "<text x=\"12\" y=\"" << H / 2 << "\" transform=\"rotate(-90 12 " << H / 2
    << ")\" text-anchor=\"middle\">log10 median value</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* col = colors[k % 6];
    const auto& pts = series[k].second;
    if (pts.empty()) continue;
    o << "<polyline fill=\"none\" stroke=\"" << col << "\"" << (k % 2 ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
    for (const Pt& p : pts) o << X(p.x) << "," << Y(p.y) << " ";
    o << "\"/>\n";
    for (const Pt& p : pts) o << "<circle cx=\"" << X(p.x) << "\" cy=\"" << Y(p.y) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    o << "<text x=\"" << W - m + 4 - 120 << "\" y=\"" << m + 14 * k << "\" fill=\"" << col << "\">" << series[k].first
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

Interval wilson_interval(long long hits, long long total, double z) {
  if (total <= 0) throw std::invalid_argument("wilson_interval: total must be positive");
  const double n = static_cast<double>(total);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double den = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / den;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

SlopeFit ols_slope(const std::vector<double>& x, const std::vector<double>& y, std::string name) {
  if (x.size() != y.size()) throw DimensionError("ols_slope: x and y differ in length");
  if (x.size() < 3) throw std::invalid_argument("ols_slope: needs at least 3 points");
  const double k = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / k;
    my += y[i] / k;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("ols_slope: x values are all equal");
  SlopeFit f;
  f.name = std::move(name);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    ssr += e * e;
  }
  f.stderr_ = std::sqrt(ssr / (k - 2.0) / sxx);
  f.points = static_cast<int>(x.size());
  return f;
}

}  // namespace lapcert
