#pragma once

#include <Eigen/Dense>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace pamfbo {

enum class RmseDenominator {
  Reference,         // divide each squared deviation by the reference entry
  ReferenceSquared,  // sensitivity alternative: divide by its square
};

// Root mean square discrepancy between a reference field and a monitored
// field, each squared deviation divided by the reference entry.
double discrepancy_rmse(const Eigen::VectorXd& reference, const Eigen::VectorXd& monitored,
                        RmseDenominator denominator = RmseDenominator::Reference);

// A hierarchy of objective evaluators over a common box domain, with
// per-level relative costs (top level = 1) and an extractor for the physics
// variables a bias may consume.
struct MultifidelityProblem {
  std::string name;
  int dimension = 0;
  int num_levels = 0;
  Eigen::VectorXd lower, upper;
  std::vector<std::function<double(const Eigen::VectorXd&)>> evaluators;  // index 0 = level 1
  std::vector<double> cost_ratios;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> psi_extractor;
  std::string psi_description;

  std::optional<Eigen::VectorXd> optimum_x;  // known minimizer of the top level
  std::optional<double> optimum_value;
  std::optional<Eigen::VectorXd> ground_truth;  // hidden parameters of inverse problems

  double evaluate(const Eigen::VectorXd& x, int level) const;
  nlohmann::json manifest() const;
};

// 1-D two-fidelity benchmark: a sharp multimodal top level and a shifted,
// rescaled low fidelity, with an aerodynamic-style cost ratio.
MultifidelityProblem forrester_pair();

// 2-D three-fidelity benchmark over (w, M). Lower fidelities track the top
// level closely at low M and drift increasingly as M approaches 1, so they
// are only trustworthy away from the critical regime.
MultifidelityProblem cross_regime_problem();

// 4-D two-fidelity inverse identification task over (q1, q2, q3, q4):
// recover the hidden damage parameters by minimizing the strain-field
// discrepancy against a reference computed at `q_true`. The low fidelity
// sees a smoothed field and confounds short cuts under high load with
// extended cuts under moderate load.
MultifidelityProblem plate_identification_problem(
    const Eigen::VectorXd& q_true, RmseDenominator denominator = RmseDenominator::Reference);

// Single-level view of a problem: keeps only the top evaluator at unit cost.
MultifidelityProblem restrict_to_highest(const MultifidelityProblem& problem);

// Registry addressed by name from run configurations.
std::vector<std::string> registered_problems();
MultifidelityProblem make_problem(const std::string& name, const nlohmann::json& params);

namespace plate_detail {
// Synthetic strain fields on a fixed grid, exposed for tests.
Eigen::VectorXd strain_field(const Eigen::VectorXd& q, int level);
Eigen::Index grid_size();
}  // namespace plate_detail

}  // namespace pamfbo
