#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pamfbo/study.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

std::string output_root_from_env() {
  const char* root = std::getenv("PAMFBO_OUTPUT_ROOT");
  return root != nullptr ? root : "";
}

int cmd_run(const std::string& config_path, std::string output_root) {
  pamfbo::StudyConfig config;
  try {
    config = pamfbo::StudyConfig::load(config_path);
    pamfbo::validate_study_config(config);
  } catch (const pamfbo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (output_root.empty()) output_root = output_root_from_env();
  try {
    const pamfbo::StudySummary summary = pamfbo::run_study(config, output_root);
    std::cout << pamfbo::compare_table({summary.to_json()}, std::nullopt);
    if (summary.failed_replications > 0) {
      std::cerr << summary.failed_replications << " replication(s) failed\n";
      return kExitRuntimeError;
    }
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  try {
    const pamfbo::StudyConfig config = pamfbo::StudyConfig::load(config_path);
    pamfbo::validate_study_config(config);
  } catch (const pamfbo::ConfigError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitConfigError;
  }
  std::cout << "ok\n";
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& summary_paths, std::optional<double> baseline,
                const std::string& csv_path) {
  std::vector<nlohmann::json> summaries;
  for (const auto& path : summary_paths) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "cannot open summary '" << path << "'\n";
      return kExitConfigError;
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "summary '" << path << "': " << e.what() << "\n";
      return kExitConfigError;
    }
    summaries.push_back(std::move(j));
  }
  try {
    std::cout << pamfbo::compare_table(summaries, baseline);
    if (!csv_path.empty()) {
      std::ofstream out(csv_path);
      out << pamfbo::compare_table(summaries, baseline, true);
    }
  } catch (const std::exception& e) {
    std::cerr << "compare failed: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"physics-aware multifidelity Bayesian optimization benchmark runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_root;
  auto* run = app.add_subcommand("run", "execute a study from a JSON configuration");
  run->add_option("config", config_path, "path to the study configuration")->required();
  run->add_option("--output-root", output_root, "directory prepended to output_dir");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a configuration without running it");
  validate->add_option("config", validate_path, "path to the study configuration")->required();

  std::vector<std::string> summary_paths;
  double baseline_value = 0.0;
  std::string csv_path;
  auto* compare = app.add_subcommand("compare", "tabulate medians from summary files");
  compare->add_option("summaries", summary_paths, "summary.json files")->required();
  auto* baseline_opt =
      compare->add_option("--baseline", baseline_value, "baseline for improvement percentages");
  compare->add_option("--csv", csv_path, "also write the table as CSV to this path");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, output_root);
  if (validate->parsed()) return cmd_validate(validate_path);
  if (compare->parsed()) {
    std::optional<double> baseline;
    if (baseline_opt->count() > 0) baseline = baseline_value;
    return cmd_compare(summary_paths, baseline, csv_path);
  }
  return kExitConfigError;
}
