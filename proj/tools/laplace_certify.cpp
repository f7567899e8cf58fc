#include "lapcert/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitViolation = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lapcert::ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// The subcommand decides the experiment; a config that names a different one is rejected.
std::string with_experiment(const std::string& text, const std::string& command) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw lapcert::ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw lapcert::ConfigError("config: top level must be an object");
  if (j.contains("experiment") && j["experiment"] != command) {
    throw lapcert::ConfigError("config: experiment '" + j["experiment"].dump() + "' does not match command '" + command + "'");
  }
  j["experiment"] = command;
  return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplace and BvM total-variation certificates"};
  app.set_version_flag("--version", "laplace-certify 0.1.0");
  std::string command, config_path, out_path, svg_path, summary_path;
  int jobs = 1;
  app.add_option("command", command, "certify | bvm | events | sweep | tv")
      ->required()
      ->check(CLI::IsMember({"certify", "bvm", "events", "sweep", "tv"}));
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_path, "CSV output path (default: stdout)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--svg", svg_path, "line plot of sweep medians");
  app.add_option("--summary", summary_path, "JSON summary path (default: <out>.summary.json)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  lapcert::ExperimentConfig cfg;
  try {
    cfg = lapcert::parse_config(with_experiment(read_file(config_path), command));
  } catch (const lapcert::ConfigError& e) {
    std::cerr << "laplace-certify: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const lapcert::ExperimentResult res = lapcert::run_experiment(cfg, jobs);
    const std::string csv = lapcert::records_to_csv(res.records);
    if (out_path.empty()) {
      std::cout << csv;
    } else {
      write_file(out_path, csv);
    }
    if (summary_path.empty() && !out_path.empty()) {
      std::filesystem::path p(out_path);
      summary_path = (p.parent_path() / p.stem()).string() + ".summary.json";
    }
    if (!summary_path.empty()) write_file(summary_path, lapcert::summary_json(res));
    if (!svg_path.empty()) write_file(svg_path, lapcert::sweep_svg(res));

    long long errors = 0;
    for (const auto& r : res.records) errors += r.error() ? 1 : 0;
    std::cerr << "laplace-certify: " << res.records.size() << " rows, " << errors << " error rows, "
              << res.violations.size() << " violations\n";
    for (const auto& v : res.violations) std::cerr << "  violation: " << v << "\n";
    return res.violations.empty() ? kExitOk : kExitViolation;
  } catch (const lapcert::ConfigError& e) {
    std::cerr << "laplace-certify: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "laplace-certify: " << e.what() << "\n";
    return kExitFailure;
  }
}
