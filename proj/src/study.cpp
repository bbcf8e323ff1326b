#include "pamfbo/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pamfbo/bias_expr.hpp"

namespace pamfbo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double json_finite(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field + ": must be finite");
  return v;
}

nlohmann::json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// BiasSpec
// ---------------------------------------------------------------------------

std::unique_ptr<PhysicsBias> BiasSpec::build(int dimension) const {
  if (kind == "identity") return std::make_unique<IdentityBias>();
  if (kind == "mach") {
    const int index = params.contains("mach_index")
                          ? params.at("mach_index").get<int>()
                          : dimension - 1;
    const double sonic = params.contains("sonic_mach")
                             ? json_finite(params.at("sonic_mach"), "bias.sonic_mach")
                             : 1.0;
    if (index < 0 || index >= dimension) {
      throw ConfigError("bias.mach_index: outside 0.." + std::to_string(dimension - 1));
    }
    return std::make_unique<MachBias>(index, sonic);
  }
  if (kind == "damage") {
    if (!params.contains("q3_index") || !params.contains("q4_index")) {
      throw ConfigError("bias: damage bias requires q3_index and q4_index");
    }
    const int q3 = params.at("q3_index").get<int>();
    const int q4 = params.at("q4_index").get<int>();
    const double q3_max =
        params.contains("q3_max") ? json_finite(params.at("q3_max"), "bias.q3_max") : 30.0;
    const double q4_max =
        params.contains("q4_max") ? json_finite(params.at("q4_max"), "bias.q4_max") : 20.0;
    if (q3 < 0 || q3 >= dimension || q4 < 0 || q4 >= dimension) {
      throw ConfigError("bias: damage coordinate indices outside 0.." +
                        std::to_string(dimension - 1));
    }
    return std::make_unique<DamageBias>(q3, q4, q3_max, q4_max);
  }
  if (kind == "custom") {
    if (!params.contains("expression") || !params.at("expression").is_string()) {
      throw ConfigError("bias.expression: custom bias requires an expression string");
    }
    try {
      return std::make_unique<ExpressionBias>(
          BiasExpression::parse(params.at("expression").get<std::string>(), dimension));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("bias.expression: ") + e.what());
    }
  }
  throw ConfigError("bias.name: unknown bias '" + kind +
                    "' (allowed: identity, mach, damage, custom)");
}

BiasSpec BiasSpec::from_json(const nlohmann::json& j) {
  BiasSpec spec;
  if (j.is_null()) return spec;
  if (j.is_string()) {
    spec.kind = j.get<std::string>();
    return spec;
  }
  if (!j.is_object()) throw ConfigError("bias: expected an object or a name");
  if (j.contains("name")) spec.kind = j.at("name").get<std::string>();
  spec.params = j;
  spec.params.erase("name");
  return spec;
}

nlohmann::json BiasSpec::to_json() const {
  nlohmann::json j = params;
  j["name"] = kind;
  return j;
}

// ---------------------------------------------------------------------------
// StudyConfig
// ---------------------------------------------------------------------------

StudyConfig StudyConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  StudyConfig cfg;

  if (!j.contains("problem")) throw ConfigError("problem: missing");
  const auto& pj = j.at("problem");
  if (pj.is_string()) {
    cfg.problem_name = pj.get<std::string>();
  } else if (pj.is_object()) {
    if (!pj.contains("name")) throw ConfigError("problem.name: missing");
    cfg.problem_name = pj.at("name").get<std::string>();
    cfg.problem_params = pj;
    cfg.problem_params.erase("name");
  } else {
    throw ConfigError("problem: expected a name or an object");
  }

  if (!j.contains("algorithm")) throw ConfigError("algorithm: missing");
  try {
    cfg.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("algorithm: ") + e.what());
  }

  if (j.contains("bias")) cfg.bias = BiasSpec::from_json(j.at("bias"));

  if (!j.contains("init_counts") || !j.at("init_counts").is_array()) {
    throw ConfigError("init_counts: missing or not an array");
  }
  for (const auto& c : j.at("init_counts")) {
    if (!c.is_number_integer() || c.get<int>() < 0) {
      throw ConfigError("init_counts: entries must be non-negative integers");
    }
    cfg.init_counts.push_back(c.get<int>());
  }

  if (!j.contains("budget_max")) throw ConfigError("budget_max: missing");
  cfg.budget_max = json_finite(j.at("budget_max"), "budget_max");
  if (!(cfg.budget_max > 0.0)) throw ConfigError("budget_max: must be positive");

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

  if (j.contains("replications")) {
    cfg.replications = j.at("replications").get<int>();
    if (cfg.replications < 1) throw ConfigError("replications: must be >= 1");
  }

  if (j.contains("checkpoints")) {
    if (!j.at("checkpoints").is_array()) throw ConfigError("checkpoints: expected an array");
    for (const auto& c : j.at("checkpoints")) {
      cfg.checkpoints.push_back(json_finite(c, "checkpoints"));
    }
    if (!std::is_sorted(cfg.checkpoints.begin(), cfg.checkpoints.end())) {
      throw ConfigError("checkpoints: must be sorted ascending");
    }
  }

  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

  if (j.contains("noise_variance")) {
    cfg.noise_variance = json_finite(j.at("noise_variance"), "noise_variance");
    if (cfg.noise_variance < 0.0) throw ConfigError("noise_variance: must be >= 0");
  }

  if (j.contains("cost_ratios")) {
    if (!j.at("cost_ratios").is_array()) throw ConfigError("cost_ratios: expected an array");
    std::vector<double> ratios;
    for (const auto& c : j.at("cost_ratios")) ratios.push_back(json_finite(c, "cost_ratios"));
    cfg.cost_ratios = std::move(ratios);
  }

  if (j.contains("search")) {
    const auto& sj = j.at("search");
    if (sj.contains("pool_per_dimension")) {
      cfg.search.pool_per_dimension = sj.at("pool_per_dimension").get<int>();
      if (cfg.search.pool_per_dimension < 1) throw ConfigError("search.pool_per_dimension: must be >= 1");
    }
    if (sj.contains("refine_count")) cfg.search.refine_count = sj.at("refine_count").get<int>();
    if (sj.contains("initial_fit_starts")) {
      cfg.search.initial_fit_starts = sj.at("initial_fit_starts").get<int>();
    }
    if (sj.contains("refit_starts")) cfg.search.refit_starts = sj.at("refit_starts").get<int>();
  }
  return cfg;
}

StudyConfig StudyConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json StudyConfig::to_json() const {
  nlohmann::json j;
  nlohmann::json pj = problem_params;
  pj["name"] = problem_name;
  j["problem"] = std::move(pj);
  j["algorithm"] = algorithm_name(algorithm);
  j["bias"] = bias.to_json();
  j["init_counts"] = init_counts;
  j["budget_max"] = budget_max;
  j["seed"] = seed;
  j["replications"] = replications;
  j["checkpoints"] = checkpoints;
  j["output_dir"] = output_dir;
  j["noise_variance"] = noise_variance;
  if (cost_ratios) j["cost_ratios"] = *cost_ratios;
  return j;
}

MultifidelityProblem validate_study_config(const StudyConfig& config) {
  MultifidelityProblem problem;
  try {
    problem = make_problem(config.problem_name, config.problem_params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }

  if (config.cost_ratios) {
    const auto& ratios = *config.cost_ratios;
    if (static_cast<int>(ratios.size()) != problem.num_levels) {
      throw ConfigError("cost_ratios: expected one entry per level (" +
                        std::to_string(problem.num_levels) + ")");
    }
    if (ratios.back() != 1.0) throw ConfigError("cost_ratios: top-level entry must equal 1");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      if (!(ratios[i] > 0.0) || ratios[i] > 1.0) {
        throw ConfigError("cost_ratios: entries must lie in (0, 1]");
      }
      if (i > 0 && !(ratios[i] > ratios[i - 1])) {
        throw ConfigError("cost_ratios: must be strictly increasing");
      }
    }
    problem.cost_ratios = ratios;
  }

  const int effective_levels = config.algorithm == Algorithm::Ego ? 1 : problem.num_levels;
  if (static_cast<int>(config.init_counts.size()) != effective_levels) {
    throw ConfigError("init_counts: expected " + std::to_string(effective_levels) +
                      " entries for " + algorithm_name(config.algorithm) + " on " +
                      config.problem_name);
  }
  if (config.init_counts[0] < problem.dimension + 1) {
    throw ConfigError("init_counts: lowest level needs at least dimension+1 = " +
                      std::to_string(problem.dimension + 1) + " samples");
  }
  double init_cost = 0.0;
  for (int l = 0; l < effective_levels; ++l) {
    if (config.init_counts[l] < 2) {
      throw ConfigError("init_counts: every level needs at least 2 samples to fit");
    }
    const double ratio = config.algorithm == Algorithm::Ego ? 1.0 : problem.cost_ratios[l];
    init_cost += config.init_counts[l] * ratio;
  }
  if (config.budget_max + 1e-9 < init_cost) {
    throw ConfigError("budget_max: below the initialization cost of " + std::to_string(init_cost));
  }

  (void)config.bias.build(problem.dimension);  // validates names, indices, expressions

  for (double c : config.checkpoints) {
    if (c > config.budget_max + 1e-9) {
      throw ConfigError("checkpoints: entry exceeds budget_max");
    }
  }
  return problem;
}

// ---------------------------------------------------------------------------
// Percentiles and summaries
// ---------------------------------------------------------------------------

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

nlohmann::json StudySummary::to_json() const {
  nlohmann::json j;
  j["label"] = algorithm_name(config.algorithm) + std::string("@") + config.problem_name;
  j["algorithm"] = algorithm_name(config.algorithm);
  j["problem"] = problem_manifest;
  j["config"] = config.to_json();
  j["replications"] = config.replications;
  j["failed_replications"] = failed_replications;
  j["checkpoints"] = checkpoints;
  nlohmann::json best;
  best["median"] = nlohmann::json::array();
  best["p25"] = nlohmann::json::array();
  best["p75"] = nlohmann::json::array();
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    best["median"].push_back(number_or_null(median_best[i]));
    best["p25"].push_back(number_or_null(p25_best[i]));
    best["p75"].push_back(number_or_null(p75_best[i]));
  }
  j["best_so_far"] = std::move(best);
  j["mean_calls_per_level"] = mean_calls_per_level;
  j["per_rep"] = per_rep;
  return j;
}

StudySummary run_study(const StudyConfig& config, const std::string& output_root) {
  const MultifidelityProblem problem = validate_study_config(config);
  const auto bias = config.bias.build(problem.dimension);

  namespace fs = std::filesystem;
  fs::path out_dir = config.output_dir;
  if (!output_root.empty()) out_dir = fs::path(output_root) / out_dir;
  fs::create_directories(out_dir);

  StudySummary summary;
  summary.config = config;
  summary.problem_manifest = problem.manifest();
  summary.checkpoints = config.checkpoints;
  if (summary.checkpoints.empty()) summary.checkpoints.push_back(config.budget_max);

  const int effective_levels = config.algorithm == Algorithm::Ego ? 1 : problem.num_levels;
  std::vector<std::vector<double>> best_at_checkpoint(summary.checkpoints.size());
  std::vector<double> call_sums(effective_levels, 0.0);
  int completed = 0;

  for (int rep = 0; rep < config.replications; ++rep) {
    const std::uint64_t rep_seed = config.seed + static_cast<std::uint64_t>(rep);
    nlohmann::json rep_json;
    rep_json["replication"] = rep;
    rep_json["seed"] = rep_seed;
    try {
      InitPlan plan{config.init_counts, rep_seed};
      RunConfig run_config;
      run_config.budget_max = config.budget_max;
      run_config.seed = rep_seed;
      run_config.noise_variance = config.noise_variance;
      run_config.search = config.search;

      const RunHistory history = run(problem, config.algorithm, *bias, plan, run_config);

      char name[32];
      std::snprintf(name, sizeof name, "history_rep%03d.csv", rep);
      std::ofstream csv(out_dir / name);
      csv << history.to_csv();

      const RunMetrics rm = metrics(history, problem.ground_truth);
      for (std::size_t c = 0; c < summary.checkpoints.size(); ++c) {
        best_at_checkpoint[c].push_back(rm.best_at(summary.checkpoints[c]));
      }
      for (int l = 0; l < effective_levels; ++l) call_sums[l] += rm.calls_per_level[l];
      ++completed;

      rep_json["final_budget"] = history.final_budget();
      rep_json["best_value"] = number_or_null(rm.best_value);
      if (rm.incumbent) {
        nlohmann::json inc = nlohmann::json::array();
        for (int m = 0; m < rm.incumbent->size(); ++m) inc.push_back((*rm.incumbent)[m]);
        rep_json["incumbent"] = std::move(inc);
      }
      rep_json["calls_per_level"] = rm.calls_per_level;
      if (rm.relative_errors_pct) rep_json["relative_errors_pct"] = *rm.relative_errors_pct;
      if (history.aborted) rep_json["aborted"] = history.abort_reason;
      rep_json["history_csv"] = name;
    } catch (const std::exception& e) {
      std::cerr << "replication " << rep << " failed: " << e.what() << "\n";
      rep_json["failed"] = e.what();
      ++summary.failed_replications;
    }
    summary.per_rep.push_back(std::move(rep_json));
  }

  for (std::size_t c = 0; c < summary.checkpoints.size(); ++c) {
    auto& values = best_at_checkpoint[c];
    const bool usable = !values.empty() &&
                        std::none_of(values.begin(), values.end(),
                                     [](double v) { return std::isnan(v); });
    summary.median_best.push_back(usable ? percentile(values, 50.0) : kNaN);
    summary.p25_best.push_back(usable ? percentile(values, 25.0) : kNaN);
    summary.p75_best.push_back(usable ? percentile(values, 75.0) : kNaN);
  }
  for (int l = 0; l < effective_levels; ++l) {
    summary.mean_calls_per_level.push_back(completed > 0 ? call_sums[l] / completed : kNaN);
  }

  std::ofstream out(out_dir / "summary.json");
  out << summary.to_json().dump(2) << "\n";
  return summary;
}

// ---------------------------------------------------------------------------
// Comparison table
// ---------------------------------------------------------------------------

std::string compare_table(const std::vector<nlohmann::json>& summaries,
                          std::optional<double> baseline, bool csv) {
  if (summaries.empty()) throw std::invalid_argument("compare: no summaries given");

  const auto& grid = summaries.front().at("checkpoints");
  std::vector<std::string> labels;
  for (const auto& s : summaries) {
    labels.push_back(s.contains("label") ? s.at("label").get<std::string>() : "summary");
  }

  auto cell_text = [&](const nlohmann::json& summary, std::size_t row) -> std::string {
    const auto& checkpoints = summary.at("checkpoints");
    const auto& medians = summary.at("best_so_far").at("median");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      if (checkpoints[i] == grid[row]) {
        if (medians[i].is_null()) return "-";
        const double value = medians[i].get<double>();
        char buf[64];
        if (baseline) {
          const double improvement = (*baseline - value) / *baseline * 100.0;
          std::snprintf(buf, sizeof buf, "%.6g (%.2f %%)", value, improvement);
        } else {
          std::snprintf(buf, sizeof buf, "%.6g", value);
        }
        return buf;
      }
    }
    return "-";
  };

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"B"};
  header.insert(header.end(), labels.begin(), labels.end());
  table.push_back(std::move(header));
  for (std::size_t row = 0; row < grid.size(); ++row) {
    std::vector<std::string> line;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", grid[row].get<double>());
    line.emplace_back(buf);
    for (const auto& s : summaries) line.push_back(cell_text(s, row));
    table.push_back(std::move(line));
  }

  std::string out;
  if (csv) {
    for (const auto& line : table) {
      for (std::size_t i = 0; i < line.size(); ++i) out += (i ? "," : "") + line[i];
      out += "\n";
    }
    return out;
  }
  std::vector<std::size_t> widths(table[0].size(), 0);
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
  }
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out += line[i];
      if (i + 1 < line.size()) out += std::string(widths[i] - line[i].size() + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

}  // namespace pamfbo
