#pragma once

#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pamfbo/optimizer.hpp"

namespace pamfbo {

// Configuration problems carry the offending field in the message.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BiasSpec {
  std::string kind = "identity";  // identity | mach | damage | custom
  nlohmann::json params = nlohmann::json::object();

  std::unique_ptr<PhysicsBias> build(int dimension) const;
  static BiasSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct StudyConfig {
  std::string problem_name;
  nlohmann::json problem_params = nlohmann::json::object();
  Algorithm algorithm = Algorithm::Mfbo;
  BiasSpec bias;
  std::vector<int> init_counts;
  double budget_max = 0.0;
  std::uint64_t seed = 0;
  int replications = 1;
  std::vector<double> checkpoints;
  std::string output_dir = "out";
  double noise_variance = 0.0;
  std::optional<std::vector<double>> cost_ratios;  // optional override
  SearchConfig search;

  static StudyConfig from_json(const nlohmann::json& j);
  static StudyConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

// Full schema and cross-field validation without executing anything; returns
// the problem the study would run on.
MultifidelityProblem validate_study_config(const StudyConfig& config);

struct StudySummary {
  StudyConfig config;
  nlohmann::json problem_manifest;
  std::vector<double> checkpoints;
  std::vector<double> median_best, p25_best, p75_best;  // per checkpoint
  std::vector<double> mean_calls_per_level;
  nlohmann::json per_rep = nlohmann::json::array();
  int failed_replications = 0;

  nlohmann::json to_json() const;
};

// Executes `replications` runs with seeds seed+0..seed+R-1, writing one
// history CSV per replication plus summary.json under the output directory.
// A failed replication is logged and recorded; completed runs are kept.
StudySummary run_study(const StudyConfig& config, const std::string& output_root = "");

// Percentile with linear interpolation between closest ranks; p in [0, 100].
double percentile(std::vector<double> values, double p);

// Aligned text table of median metric per checkpoint per summary, with the
// percentage improvement against a baseline value when one is given.
std::string compare_table(const std::vector<nlohmann::json>& summaries,
                          std::optional<double> baseline, bool csv = false);

}  // namespace pamfbo
