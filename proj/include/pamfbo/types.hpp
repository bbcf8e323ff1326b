#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace pamfbo {

struct Observation {
  Eigen::VectorXd x;
  int level = 1;  // 1-based fidelity index, 1 = lowest
  double y = 0.0;
};

struct PosteriorStats {
  double mean = 0.0;
  double variance = 0.0;
};

// Multifidelity dataset. Exact (x, level) duplicates are rejected because
// they make the noise-free kernel matrix singular.
class ObservationSet {
 public:
  ObservationSet(int dimension, int num_levels);

  void add(const Eigen::VectorXd& x, int level, double y);
  void add(const Observation& obs) { add(obs.x, obs.level, obs.y); }

  int dimension() const { return dimension_; }
  int num_levels() const { return num_levels_; }
  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }
  const std::vector<Observation>& observations() const { return observations_; }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }
  int count_at_level(int level) const;

 private:
  int dimension_;
  int num_levels_;
  std::vector<Observation> observations_;
};

}  // namespace pamfbo
