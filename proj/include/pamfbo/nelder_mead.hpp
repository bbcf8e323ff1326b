#pragma once

#include <Eigen/Dense>
#include <functional>

namespace pamfbo {

struct NelderMeadOptions {
  int max_evals = 0;        // 0 selects 60 * dim + 60
  double f_tol = 1e-9;      // relative spread of simplex values
  double x_tol = 1e-9;      // simplex diameter in box-relative units
  double init_step = 0.05;  // initial simplex step as a fraction of box width
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evals = 0;
};

// Bounded Nelder-Mead descent. Trial points are clamped into [lower, upper];
// the result is never worse than the start point.
NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                                      const Eigen::VectorXd& upper,
                                      const NelderMeadOptions& options = {});

}  // namespace pamfbo
