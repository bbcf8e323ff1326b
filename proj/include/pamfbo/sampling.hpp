#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace pamfbo {

// van der Corput radical inverse of `index` in the given base.
double radical_inverse(std::uint64_t index, std::uint64_t base);

// Halton point in [0,1)^d; index 0 is the origin, start at 1.
Eigen::VectorXd halton_point(std::uint64_t index, int dimension);

// Low-discrepancy candidate pool in [lower, upper]: Halton sequence under a
// seeded Cranley-Patterson rotation, so pools differ per seed but stay well
// spread.
std::vector<Eigen::VectorXd> halton_pool(int count, const Eigen::VectorXd& lower,
                                         const Eigen::VectorXd& upper, std::uint64_t seed);

/// Latin hypercube design: n points whose projection on every axis occupies
/// each of the n equal bins exactly once. Deterministic for a given seed.
std::vector<Eigen::VectorXd> latin_hypercube(int count, int dimension,
                                             const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& upper, std::uint64_t seed);

}  // namespace pamfbo
