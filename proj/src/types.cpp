#include "pamfbo/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pamfbo {

ObservationSet::ObservationSet(int dimension, int num_levels)
    : dimension_(dimension), num_levels_(num_levels) {
  if (dimension < 1) throw std::invalid_argument("observation set: dimension must be >= 1");
  if (num_levels < 1) throw std::invalid_argument("observation set: need at least one level");
}

void ObservationSet::add(const Eigen::VectorXd& x, int level, double y) {
  if (x.size() != dimension_) {
    throw std::invalid_argument("observation dimension mismatch: got " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(dimension_));
  }
  if (level < 1 || level > num_levels_) {
    throw std::invalid_argument("observation level " + std::to_string(level) +
                                " outside 1.." + std::to_string(num_levels_));
  }
  if (!x.allFinite() || !std::isfinite(y)) {
    throw std::invalid_argument("observation has non-finite entries");
  }
  for (const auto& obs : observations_) {
    if (obs.level == level && obs.x == x) {
      throw std::invalid_argument("duplicate observation at level " + std::to_string(level));
    }
  }
  observations_.push_back({x, level, y});
}

int ObservationSet::count_at_level(int level) const {
  int n = 0;
  for (const auto& obs : observations_) {
    if (obs.level == level) ++n;
  }
  return n;
}

}  // namespace pamfbo
