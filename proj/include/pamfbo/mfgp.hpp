#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "pamfbo/types.hpp"

namespace pamfbo {

// Posterior variances below this are treated as fully resolved points, e.g.
// when forming posterior correlations.
inline constexpr double kResolvedVariance = 1e-12;

// Hyperparameters of one level of the autoregressive hierarchy. Level 1 is
// the base process; each level l >= 2 describes the discrepancy to the level
// below, its constant trend, and the scaling applied to the level below.
struct LevelHyperparameters {
  Eigen::VectorXd roughness;      // per-dimension inverse squared length scales, > 0
  double process_variance = 1.0;  // > 0
  std::optional<double> scaling;  // rho applied to the level below; absent at level 1
  std::optional<double> trend;    // constant discrepancy trend; absent at level 1
};

/// Squared-exponential covariance with per-dimension roughness weights.
double kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
              const LevelHyperparameters& hyper);

// Joint prior covariance of the observations under the recursive scheme with
// the noise variance added on the diagonal. Rows/columns follow dataset
// order; coordinates are used exactly as given.
Eigen::MatrixXd assemble_kernel_matrix(const ObservationSet& data,
                                       const std::vector<LevelHyperparameters>& hyper,
                                       double noise_variance);

// Gaussian log marginal likelihood of the data under the given
// hyperparameters. Returns -infinity when the kernel matrix cannot be
// factorized, so likelihood searches treat the point as infeasible.
double log_marginal_likelihood(const ObservationSet& data,
                               const std::vector<LevelHyperparameters>& hyper,
                               double noise_variance);

struct FitConfig {
  Eigen::VectorXd lower;  // domain bounds; inputs are rescaled to the unit box
  Eigen::VectorXd upper;
  int num_starts = 6;          // quasi-random simplex starts per level
  int max_simplex_evals = 0;   // 0 selects an automatic budget
  double log_roughness_lo = -6.0, log_roughness_hi = 6.0;
  double log_variance_lo = -6.0, log_variance_hi = 6.0;
  double scaling_lo = -5.0, scaling_hi = 5.0;
  // adaptive diagonal jitter, as factors of trace(K)/n, escalated x10
  double jitter_floor = 1e-10;
  double jitter_ceil = 1e-4;
  // previous hyperparameters, appended as an extra simplex start when present
  std::vector<LevelHyperparameters> warm_start;
};

// Search record for one level's likelihood maximization: objective value at
// every simplex start and at the selected hyperparameters.
struct LevelFitReport {
  std::vector<double> seed_values;
  double best_value = -std::numeric_limits<double>::infinity();
  int evals = 0;
};

// Posterior summary for one location across all fidelities.
struct PosteriorBundle {
  Eigen::VectorXd mean;            // per level
  Eigen::VectorXd variance;        // per level, clamped at 0
  Eigen::VectorXd cross_with_top;  // posterior covariance with the top level
  double resolved_tol = kResolvedVariance;  // variances below this count as resolved
};

// Fitted recursive multifidelity Gaussian process. Immutable once built and
// safe to share across concurrent readers.
class MfGpModel {
 public:
  // Builds the posterior machinery for explicitly given hyperparameters.
  // Roughness values refer to unit-box coordinates defined by the bounds.
  MfGpModel(ObservationSet data, std::vector<LevelHyperparameters> hyper, double noise_variance,
            Eigen::VectorXd lower, Eigen::VectorXd upper);

  // Level-by-level maximum likelihood estimation: the base level alone, then
  // each discrepancy given the posterior of the level below.
  static MfGpModel fit(const ObservationSet& data, double noise_variance,
                       const FitConfig& config);

  PosteriorStats predict(const Eigen::VectorXd& x, int level) const;

  // Posterior correlation between the given level and the top level at the
  // same location, clamped to [-1, 1]; 0 when either variance is resolved.
  double posterior_correlation(const Eigen::VectorXd& x, int level) const;

  // One-pass posterior at every level, sharing the factorization work.
  PosteriorBundle posterior_bundle(const Eigen::VectorXd& x) const;

  const ObservationSet& data() const { return data_; }
  const std::vector<LevelHyperparameters>& hyperparameters() const { return hyper_; }
  double noise_variance() const { return noise_variance_; }
  const Eigen::VectorXd& lower_bounds() const { return lower_; }
  const Eigen::VectorXd& upper_bounds() const { return upper_; }
  int num_levels() const { return data_.num_levels(); }
  int dimension() const { return data_.dimension(); }
  double jitter_used() const { return jitter_used_; }
  // variance scale below which a point counts as fully resolved; sits above
  // the numerical jitter so regularization noise is not mistaken for signal
  double resolved_variance_tol() const {
    return std::max(kResolvedVariance, 16.0 * jitter_used_);
  }
  const std::vector<LevelFitReport>& fit_reports() const { return fit_reports_; }

  // Joint log marginal likelihood of the stored data at the stored
  // hyperparameters (unit-box coordinates, including the jitter in use).
  double joint_log_likelihood() const;

 private:
  Eigen::VectorXd scale_point(const Eigen::VectorXd& x) const;
  // covariance between a fresh point and every training row, one column per level
  Eigen::MatrixXd cross_covariance_all(const Eigen::VectorXd& x_scaled) const;
  // solve against the noise-augmented kernel matrix, polishing the jittered
  // Cholesky solution toward the unregularized system while it helps
  Eigen::VectorXd solve_system(const Eigen::VectorXd& rhs, int max_refinements = 2) const;
  void factorize();

  ObservationSet data_;  // problem units
  std::vector<LevelHyperparameters> hyper_;
  double noise_variance_ = 0.0;
  Eigen::VectorXd lower_, upper_;

  Eigen::MatrixXd x_scaled_;      // n x d, unit box
  std::vector<int> levels_;       // per row
  Eigen::VectorXd y_;             // per row
  Eigen::MatrixXd chain_;        // chain_(a,b) = prod of scalings from level a+1..b, 0-based
  Eigen::VectorXd prior_mean_;   // per level
  Eigen::VectorXd prior_var_;    // per level (stationary: independent of x)
  Eigen::VectorXd mean_vector_;  // prior mean at training rows
  Eigen::MatrixXd kernel_noise_;  // K + noise I, before jitter
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;  // (K + noise I)^{-1} (y - m), refined solve
  double jitter_used_ = 0.0;
  std::vector<LevelFitReport> fit_reports_;

  friend class MfGpFitter;
};

}  // namespace pamfbo
