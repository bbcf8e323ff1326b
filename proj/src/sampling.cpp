#include "pamfbo/sampling.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pamfbo/random.hpp"

namespace pamfbo {

namespace {

constexpr std::uint64_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                     31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

void check_bounds(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("bounds dimension mismatch");
  }
  for (int m = 0; m < lower.size(); ++m) {
    if (!(lower[m] < upper[m]) || !std::isfinite(lower[m]) || !std::isfinite(upper[m])) {
      throw std::invalid_argument("invalid bounds in dimension " + std::to_string(m));
    }
  }
}

}  // namespace

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double digit = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += digit * static_cast<double>(index % base);
    index /= base;
    digit /= static_cast<double>(base);
  }
  return result;
}

Eigen::VectorXd halton_point(std::uint64_t index, int dimension) {
  if (dimension < 1 || dimension > static_cast<int>(std::size(kPrimes))) {
    throw std::invalid_argument("halton dimension out of range");
  }
  Eigen::VectorXd p(dimension);
  for (int m = 0; m < dimension; ++m) {
    p[m] = radical_inverse(index, kPrimes[m]);
  }
  return p;
}

std::vector<Eigen::VectorXd> halton_pool(int count, const Eigen::VectorXd& lower,
                                         const Eigen::VectorXd& upper, std::uint64_t seed) {
  check_bounds(lower, upper);
  if (count < 1) throw std::invalid_argument("pool count must be positive");
  const int d = static_cast<int>(lower.size());
  Rng rng(seed);
  Eigen::VectorXd shift(d);
  for (int m = 0; m < d; ++m) shift[m] = rng.uniform();

  std::vector<Eigen::VectorXd> points;
  points.reserve(count);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd u = halton_point(static_cast<std::uint64_t>(i) + 1, d);
    for (int m = 0; m < d; ++m) {
      double v = u[m] + shift[m];
      v -= std::floor(v);
      u[m] = lower[m] + (upper[m] - lower[m]) * v;
    }
    points.push_back(std::move(u));
  }
  return points;
}

std::vector<Eigen::VectorXd> latin_hypercube(int count, int dimension,
                                             const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& upper, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("latin hypercube needs at least one point");
  if (dimension < 1 || dimension != lower.size()) {
    throw std::invalid_argument("latin hypercube dimension mismatch");
  }
  check_bounds(lower, upper);

  std::vector<Eigen::VectorXd> points(count, Eigen::VectorXd(dimension));
  for (int m = 0; m < dimension; ++m) {
    // independent permutation and in-bin offsets per axis
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
    std::vector<int> bins(count);
    std::iota(bins.begin(), bins.end(), 0);
    rng.shuffle(bins);
    const double width = (upper[m] - lower[m]) / count;
    for (int i = 0; i < count; ++i) {
      points[i][m] = lower[m] + width * (bins[i] + rng.uniform());
    }
  }
  return points;
}

}  // namespace pamfbo
