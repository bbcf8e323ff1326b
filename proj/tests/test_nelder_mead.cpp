#include <doctest.h>

#include <cmath>

#include "pamfbo/nelder_mead.hpp"

using namespace pamfbo;

TEST_CASE("nelder-mead finds the minimum of a shifted quadratic") {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(3, -5.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(3, 5.0);
  Eigen::VectorXd target(3);
  target << 1.2, -0.7, 3.1;
  auto f = [&](const Eigen::VectorXd& x) { return (x - target).squaredNorm(); };

  const auto res = nelder_mead_minimize(f, Eigen::VectorXd::Zero(3), lo, hi, {});
  CHECK((res.x - target).norm() < 1e-4);
  CHECK(res.value < 1e-7);
}

TEST_CASE("nelder-mead respects the box when the minimum lies outside") {
  Eigen::VectorXd lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;
  auto f = [](const Eigen::VectorXd& x) { return (x[0] - 3.0) * (x[0] - 3.0); };
  Eigen::VectorXd start(1);
  start << 0.2;
  const auto res = nelder_mead_minimize(f, start, lo, hi, {});
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("nelder-mead never returns worse than its start") {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -2.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 2.0);
  // rough landscape with plenty of local structure
  auto f = [](const Eigen::VectorXd& x) {
    return std::sin(15.0 * x[0]) * std::cos(13.0 * x[1]) + 0.3 * x.squaredNorm();
  };
  for (double a : {-1.7, -0.4, 0.1, 0.9, 1.9}) {
    Eigen::VectorXd start(2);
    start << a, -a * 0.5;
    const auto res = nelder_mead_minimize(f, start, lo, hi, {});
    CHECK(res.value <= f(start));
  }
}

TEST_CASE("nelder-mead honors the evaluation budget") {
  Eigen::VectorXd lo(4), hi(4);
  lo.setConstant(-1.0);
  hi.setConstant(1.0);
  auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  NelderMeadOptions options;
  options.max_evals = 17;
  const auto res = nelder_mead_minimize(f, Eigen::VectorXd::Constant(4, 0.8), lo, hi, options);
  CHECK(res.evals <= 17 + 4);  // a shrink step may finish its sweep
}
