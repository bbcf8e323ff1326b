#pragma once

// Test-only dense reference for the multifidelity posterior. Every covariance
// entry is evaluated scalar-by-scalar from the autoregressive closure with
// explicit chain products, and the linear algebra runs through a dense
// full-pivot LU. Deliberately independent of the library's blockwise assembly
// and Cholesky paths.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "pamfbo/mfgp.hpp"

namespace oracle {

// product of scaling factors linking 1-based levels a..b (a <= b)
inline double chain_product(const std::vector<pamfbo::LevelHyperparameters>& hyper, int a, int b) {
  double prod = 1.0;
  for (int t = a + 1; t <= b; ++t) prod *= hyper[t - 1].scaling.value();
  return prod;
}

inline double squared_exponential(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                                  const pamfbo::LevelHyperparameters& h) {
  double s = 0.0;
  for (int m = 0; m < x.size(); ++m) {
    s += h.roughness[m] * (x[m] - x2[m]) * (x[m] - x2[m]);
  }
  return h.process_variance * std::exp(-s);
}

// prior covariance between (x, level_a) and (x2, level_b)
inline double closure_covariance(const Eigen::VectorXd& x, int level_a, const Eigen::VectorXd& x2,
                                 int level_b,
                                 const std::vector<pamfbo::LevelHyperparameters>& hyper) {
  const int lo = std::min(level_a, level_b);
  const int hi = std::max(level_a, level_b);
  double sum = 0.0;
  for (int u = 1; u <= lo; ++u) {
    const double w = chain_product(hyper, u, lo);
    sum += w * w * squared_exponential(x, x2, hyper[u - 1]);
  }
  return chain_product(hyper, lo, hi) * sum;
}

// prior mean of level l: trends propagated up through the scalings
inline double prior_mean(const std::vector<pamfbo::LevelHyperparameters>& hyper, int level) {
  double mean = 0.0;
  for (int j = 2; j <= level; ++j) {
    mean += chain_product(hyper, j, level) * hyper[j - 1].trend.value_or(0.0);
  }
  return mean;
}

inline Eigen::MatrixXd covariance_matrix(const pamfbo::ObservationSet& data,
                                         const std::vector<pamfbo::LevelHyperparameters>& hyper,
                                         double noise_variance) {
  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = closure_covariance(data[i].x, data[i].level, data[j].x, data[j].level, hyper);
    }
  }
  for (int i = 0; i < n; ++i) a(i, i) += noise_variance;
  return a;
}

struct DensePosterior {
  double mean = 0.0;
  double variance = 0.0;
  double cross_with_top = 0.0;
};

inline DensePosterior posterior(const pamfbo::ObservationSet& data,
                                const std::vector<pamfbo::LevelHyperparameters>& hyper,
                                double noise_variance, const Eigen::VectorXd& x, int level) {
  const int n = static_cast<int>(data.size());
  const int top = data.num_levels();
  const Eigen::MatrixXd a = covariance_matrix(data, hyper, noise_variance);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);

  Eigen::VectorXd k(n), k_top(n), centered(n);
  for (int j = 0; j < n; ++j) {
    k[j] = closure_covariance(x, level, data[j].x, data[j].level, hyper);
    k_top[j] = closure_covariance(x, top, data[j].x, data[j].level, hyper);
    centered[j] = data[j].y - prior_mean(hyper, data[j].level);
  }

  DensePosterior out;
  out.mean = prior_mean(hyper, level) + k.dot(lu.solve(centered));
  out.variance = closure_covariance(x, level, x, level, hyper) - k.dot(lu.solve(k));
  out.cross_with_top = closure_covariance(x, level, x, top, hyper) - k.dot(lu.solve(k_top));
  return out;
}

inline double log_likelihood(const pamfbo::ObservationSet& data,
                             const std::vector<pamfbo::LevelHyperparameters>& hyper,
                             double noise_variance) {
  const int n = static_cast<int>(data.size());
  const Eigen::MatrixXd a = covariance_matrix(data, hyper, noise_variance);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd centered(n);
  for (int j = 0; j < n; ++j) centered[j] = data[j].y - prior_mean(hyper, data[j].level);
  const double quad = centered.dot(lu.solve(centered));
  const double logdet = std::log(std::abs(lu.determinant()));
  return -0.5 * quad - 0.5 * logdet - 0.5 * n * std::log(2.0 * M_PI);
}

}  // namespace oracle
