#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "pamfbo/mfgp.hpp"

namespace pamfbo {

double normal_cdf(double z);
double normal_pdf(double z);

// Expected one-step improvement below `best` for a Gaussian belief
// N(mean, sd^2); zero at sd = 0.
double expected_improvement(double mean, double sd, double best);

// Information gain factor 1 - noise_sd / sqrt(sd^2 + noise_sd^2) in [0, 1];
// zero when both arguments vanish (a fully resolved noise-free point).
double alpha2(double posterior_sd, double noise_sd);

// Cost factor: top-level cost over the queried level's cost.
double alpha3(const std::vector<double>& cost_ratios, int level);

// Utility bias toward high-fidelity queries near the sonic condition:
// 1 below the top level, sonic / (sonic - mach) at the top level.
double mach_bias(double mach, int level, int num_levels, double sonic_mach = 1.0);

// Utility bias toward high-fidelity queries for short cuts under high load:
// 1 below the top level, 0.5 q3_max/q3 + 0.5 / (q4_max - q4) at the top.
double damage_bias(double q3, double q4, int level, int num_levels, double q3_max = 30.0,
                   double q4_max = 20.0);

// Domain-knowledge utility factor evaluated on the raw design coordinates.
// Implementations return exactly 1 below the top fidelity and a finite
// positive value at the top.
class PhysicsBias {
 public:
  virtual ~PhysicsBias() = default;
  virtual double alpha4(const Eigen::VectorXd& x, int level, int num_levels) const = 0;
  virtual std::string name() const = 0;
};

class IdentityBias final : public PhysicsBias {
 public:
  double alpha4(const Eigen::VectorXd&, int, int) const override { return 1.0; }
  std::string name() const override { return "identity"; }
};

class MachBias final : public PhysicsBias {
 public:
  MachBias(int mach_index, double sonic_mach = 1.0);
  double alpha4(const Eigen::VectorXd& x, int level, int num_levels) const override;
  std::string name() const override { return "mach"; }

 private:
  int mach_index_;
  double sonic_mach_;
};

class DamageBias final : public PhysicsBias {
 public:
  DamageBias(int q3_index, int q4_index, double q3_max = 30.0, double q4_max = 20.0);
  double alpha4(const Eigen::VectorXd& x, int level, int num_levels) const override;
  std::string name() const override { return "damage"; }

 private:
  int q3_index_, q4_index_;
  double q3_max_, q4_max_;
};

// Everything the acquisition needs besides the model and the candidate.
struct AcquisitionContext {
  double best_hf_value = 0.0;
  bool best_is_provisional = false;  // no top-level observation existed yet
  std::vector<double> cost_ratios;   // one per level, top level = 1
  double noise_sd = 0.0;
};

// Best observed top-level value, falling back to the best observation at the
// highest populated level when no top-level data exists yet.
AcquisitionContext make_acquisition_context(const ObservationSet& data,
                                            const std::vector<double>& cost_ratios,
                                            double noise_variance);

// Posterior correlation between the queried level and the top level.
double alpha1(const MfGpModel& model, const Eigen::VectorXd& x, int level);

// Physics-aware multifidelity acquisition: expected improvement at the top
// level shaped by the correlation, information, cost, and physics factors.
// The identity bias gives the plain multifidelity expected improvement.
double u_pa(const MfGpModel& model, const Eigen::VectorXd& x, int level,
            const AcquisitionContext& context, const PhysicsBias& bias);

// Shared low-level form used by the search loop. `ei_only` is the
// single-fidelity path: plain expected improvement with the same
// resolved-point guard, so the multifidelity product degenerates to it
// exactly when one noise-free level is present.
double acquisition_from_bundle(const PosteriorBundle& bundle, const Eigen::VectorXd& x, int level,
                               const AcquisitionContext& context, const PhysicsBias& bias,
                               bool ei_only);

}  // namespace pamfbo
