#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pamfbo/acquisition.hpp"
#include "pamfbo/mfgp.hpp"
#include "pamfbo/problems.hpp"

namespace pamfbo {

enum class Algorithm { Ego, Mfbo, PaMfbo };

std::string algorithm_name(Algorithm algorithm);
Algorithm algorithm_from_name(const std::string& name);

struct InitPlan {
  std::vector<int> counts;  // per level, lowest first
  std::uint64_t seed = 0;
};

struct BudgetState {
  double consumed = 0.0;
  double max = 0.0;
};

struct HistoryRecord {
  int iteration = 0;  // 0 marks initialization rows
  Eigen::VectorXd x;
  int level = 1;
  double y = 0.0;
  double cost = 0.0;    // charge for this query
  double budget = 0.0;  // cumulative after the charge
  double best_hf = std::numeric_limits<double>::quiet_NaN();  // best top-level value so far
};

struct RunHistory {
  int dimension = 0;
  int num_levels = 0;
  std::vector<HistoryRecord> records;
  bool aborted = false;
  std::string abort_reason;

  std::optional<Eigen::VectorXd> incumbent() const;  // argmin over top-level rows
  double incumbent_value() const;
  double final_budget() const;
  double best_at_budget(double budget) const;
  std::vector<int> calls_per_level() const;

  std::string to_csv() const;
  static RunHistory from_csv(const std::string& text);
};

struct SearchConfig {
  int pool_per_dimension = 512;  // candidate pool size, times the dimension
  int refine_count = 5;          // simplex refinements from the top candidates
  int refine_evals = 60;
  double duplicate_tol = 1e-9;   // unit-box distance treated as a resample
  int initial_fit_starts = 6;
  int refit_starts = 2;          // subsequent fits add the warm start
  int max_simplex_evals = 0;
};

struct RunConfig {
  double budget_max = 0.0;
  std::uint64_t seed = 0;
  double noise_variance = 0.0;
  SearchConfig search;
};

// Per-level Latin hypercube designs evaluated at their levels; the budget is
// charged the summed per-level costs.
std::pair<ObservationSet, BudgetState> initialize(const MultifidelityProblem& problem,
                                                  const InitPlan& plan);

struct AcquisitionChoice {
  Eigen::VectorXd x;
  int level = 0;
  double value = 0.0;
};

struct AcquisitionSearchResult {
  AcquisitionChoice best;
  std::vector<AcquisitionChoice> ranked;  // utility desc, then fidelity desc, then pool index
  std::vector<AcquisitionChoice> exploration;  // top-level candidates by posterior variance
  bool stalled = false;  // every candidate carried zero utility
};

// Joint argmax of the acquisition over the candidate pool and all fidelities,
// with local simplex refinement of the leading candidates. Deterministic for
// a given pool seed.
AcquisitionSearchResult maximize_acquisition(const MfGpModel& model,
                                             const AcquisitionContext& context,
                                             const PhysicsBias& bias,
                                             const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& upper,
                                             const SearchConfig& config, std::uint64_t pool_seed,
                                             bool ei_only);

// The full sequential loop: initialize, refit, maximize the acquisition,
// evaluate, update, stop once the consumed budget reaches the maximum. The
// final query may overshoot by at most the top-level cost.
RunHistory run(const MultifidelityProblem& problem, Algorithm algorithm, const PhysicsBias& bias,
               const InitPlan& plan, const RunConfig& config);

struct RunMetrics {
  std::vector<std::pair<double, double>> best_trace;  // (budget, best so far)
  std::vector<int> calls_per_level;
  double best_value = std::numeric_limits<double>::quiet_NaN();
  std::optional<Eigen::VectorXd> incumbent;
  std::optional<std::vector<double>> relative_errors_pct;  // vs ground truth, per coordinate

  double best_at(double budget) const;
  double first_budget_reaching(double threshold) const;  // +inf when never reached
};

RunMetrics metrics(const RunHistory& history,
                   const std::optional<Eigen::VectorXd>& ground_truth = std::nullopt);

}  // namespace pamfbo
