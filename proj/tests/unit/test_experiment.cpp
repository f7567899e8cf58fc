#include "lapcert/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lapcert;

namespace {

std::string strip_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config validation") {
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment":"certify","model":{"model":"cubic_radial"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment":"certify","seed":1,"model":{"model":"nope"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment":"certify","seed":1,"replications":0,"model":{"model":"cubic_radial"}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment":"certify","seed":1,"bogus":1,"model":{"model":"cubic_radial"}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment":"sweep","seed":1,"sweep":{"n":[10,100]},"model":{"model":"cubic_radial"}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment":"bvm","seed":1,"model":{"model":"cubic_radial"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment":"certify","seed":1,"model":{"model":"pmf","d":2,"theta_star":[0.5,0.5,0.5]}})"),
                    ConfigError);
    const ExperimentConfig c = parse_config(
        R"({"experiment":"bvm","seed":9,"s":[12,16],"model":{"model":"pmf","d":2,"n":100,"theta_star":[0.4,0.3,0.3]}})");
    CHECK(c.kind == ExperimentKind::bvm);
    CHECK(c.s_values.size() == 2);
    CHECK(c.model.seed == 9);
  }

  TEST_CASE("floats use 17 significant digits and '.'") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(std::nan("")) == "");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }

  TEST_CASE("CSV header and quoting") {
    RunRecord r;
    r.model = "a,\"b\"";
    r.soundness = "certified";
    const std::string csv = records_to_csv({r});
    std::string header;
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) header += (i ? "," : "") + kCsvColumns[i];
    CHECK(csv.rfind(header + "\r\n", 0) == 0);
    CHECK(header ==
          "run_id,model,d,n,s,seed,event_flags,mle_dist_Fstar,tv_measured,tv_err,bound_laplace,bound_prior,"
          "bound_gauss,bound_total,soundness,elapsed_ms");
    CHECK(csv.find("\"a,\"\"b\"\"\"") != std::string::npos);
  }

  TEST_CASE("Wilson interval and OLS") {
    const Interval w = wilson_interval(5, 10);
    CHECK(w.lo == doctest::Approx(0.2366).epsilon(1e-3));
    CHECK(w.hi == doctest::Approx(0.7634).epsilon(1e-3));
    const Interval all = wilson_interval(10, 10);
    CHECK(all.hi == doctest::Approx(1.0).epsilon(1e-15));
    const SlopeFit f = ols_slope({1, 2, 3, 4}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(-1.0));
    CHECK(f.stderr_ == doctest::Approx(0.0));
    CHECK_THROWS(ols_slope({1, 2}, {1, 2}));
  }

  TEST_CASE("certify rows for cubic_radial, quadratic and r = 5") {
    ExperimentConfig c = parse_config(R"({"experiment":"certify","seed":3,"model":{"model":"cubic_radial","d":1,"n":400}})");
    ExperimentResult r = run_certify(c);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].soundness == "certified");
    CHECK(r.records[0].tv_measured <= r.records[0].bound_total);

    c = parse_config(R"({"experiment":"certify","seed":3,"model":{"model":"quadratic","d":2,"n":50,"a":[0.5,1]}})");
    r = run_certify(c);
    CHECK(r.records[0].tv_measured <= r.records[0].tv_err + 1e-12);
    CHECK(r.records[0].bound_laplace == 0.0);

    c = parse_config(R"({"experiment":"certify","seed":3,"r":5,"model":{"model":"cubic_radial","d":2,"n":400}})");
    r = run_certify(c);
    CHECK(r.records[0].soundness == "invalid");
  }

  TEST_CASE("a failing replication becomes an error row") {
    const ExperimentConfig c = parse_config(
        R"({"experiment":"certify","seed":3,"replications":2,"model":{"model":"pmf","d":2,"n":10,"counts":[0,5,5],"theta_star":[0.4,0.3,0.3]}})");
    const ExperimentResult r = run_certify(c);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].soundness == "error:domain");
    CHECK(r.records[1].run_id == 1);
    CHECK(records_to_csv(r.records).find(",,,,,,,,error:domain,") != std::string::npos);
  }

  TEST_CASE("identical seeds give identical CSV, independent of the worker count") {
    const ExperimentConfig c = parse_config(
        R"({"experiment":"certify","seed":77,"replications":4,"model":{"model":"ones_cubic","d":2,"n":3000,"random_affine":true},
            "delta3":{"budget":300}})");
    const std::string a = records_to_csv(run_certify(c, 1).records, false);
    const std::string b = records_to_csv(run_certify(c, 3).records, false);
    CHECK(a == b);
    CHECK(strip_last_column(records_to_csv(run_certify(c, 2).records)) == strip_last_column(a));
  }

  TEST_CASE("sweep reports the exact -1/2 slope of the Laplace term") {
    const ExperimentConfig c = parse_config(
        R"({"experiment":"sweep","seed":5,"tv":"none","sweep":{"n":[1e3,1e4,1e5,1e6]},"model":{"model":"cubic_radial","d":2}})");
    const ExperimentResult r = run_sweep(c);
    CHECK(r.records.size() == 4);
    bool found = false;
    for (const SlopeFit& s : r.slopes) {
      if (s.name == "laplace_vs_n[d=2]") {
        found = true;
        CHECK(s.slope == doctest::Approx(-0.5).epsilon(1e-12));
      }
    }
    CHECK(found);
    CHECK(sweep_svg(r).find("<svg") == 0);
    const std::string js = summary_json(r);
    CHECK(js.find("\"slopes\"") != std::string::npos);
    CHECK(js.find("\"frequencies\"") != std::string::npos);
    CHECK(js.find("\"violations\"") != std::string::npos);
  }

  TEST_CASE("pmf sweep over d: the Laplace term grows like d^{3/2}") {
    const ExperimentConfig c = parse_config(
        R"({"experiment":"sweep","seed":5,"tv":"none","sweep":{"d":[2,4,8,16]},"model":{"model":"pmf","n":1e9}})");
    const ExperimentResult r = run_sweep(c);
    bool found = false;
    for (const SlopeFit& s : r.slopes) {
      if (s.name.rfind("laplace_vs_d", 0) == 0) {
        found = true;
        MESSAGE("pmf laplace slope in d: " << s.slope << " +- " << s.stderr_);
        CHECK(s.slope == doctest::Approx(1.5).epsilon(0.15));
      }
    }
    CHECK(found);
  }

  TEST_CASE("GLM event frequencies and floors") {
    const ExperimentConfig c = parse_config(
        R"({"experiment":"events","seed":4,"replications":20,"s":12,"pair_budget":50,
            "model":{"model":"logistic","d":1,"n":10000}})");
    const ExperimentResult r = run_events(c);
    int e1 = 0;
    for (const FrequencyRow& f : r.frequencies) {
      if (f.event == "E2" || f.event == "E3") CHECK(f.freq == 1.0);
      if (f.event == "E1") {
        ++e1;
        CHECK(f.floor == doctest::Approx(1 - std::exp(-14.4)));
        CHECK(f.hits == f.total);
        CHECK_FALSE(f.violation);
      }
    }
    CHECK(e1 == 1);
    CHECK(r.violations.empty());
  }

  TEST_CASE("bvm rows for a Gaussian link are exact") {
    const ExperimentConfig c = parse_config(
        R"({"experiment":"bvm","seed":4,"replications":2,"s":12,"pair_budget":20,"quadrature":{"grid":201},
            "model":{"model":"gaussian_link","d":2,"n":500}})");
    const ExperimentResult r = run_bvm(c);
    for (const RunRecord& rec : r.records) CHECK(rec.tv_measured <= rec.tv_err + 1e-9);
  }

#ifdef LAPCERT_CLI_PATH
  TEST_CASE("CLI exit codes") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "lapcert_cli_test";
    fs::create_directories(dir);
    auto write = [&](const char* name, const char* text) {
      std::ofstream(dir / name) << text;
      return (dir / name).string();
    };
    const std::string good = write("good.json", R"({"seed":1,"model":{"model":"cubic_radial","d":1,"n":400}})");
    const std::string bad = write("bad.json", R"({"seed":1,"model":{"model":"unknown"}})");
    const std::string out = (dir / "out.csv").string();
    const std::string cli = LAPCERT_CLI_PATH;
    auto run = [](const std::string& cmd) {
      const int st = std::system((cmd + " 2>/dev/null >/dev/null").c_str());
      return WEXITSTATUS(st);
    };
    CHECK(run(cli + " certify --config " + good + " --out " + out) == 0);
    CHECK(fs::exists(dir / "out.summary.json"));
    CHECK(run(cli + " certify --config " + bad) == 2);
    CHECK(run(cli + " bvm --config " + good) == 2);
    CHECK(run(cli + " certify --config " + (dir / "missing.json").string()) == 2);
    fs::remove_all(dir);
  }
#endif
}
