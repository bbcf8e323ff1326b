#include <doctest.h>

#include <cmath>
#include <limits>

#include "pamfbo/problems.hpp"

using namespace pamfbo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("discrepancy rmse: worked examples") {
  CHECK(discrepancy_rmse(vec({1.0, 4.0}), vec({1.0, 4.0})) == 0.0);
  CHECK(discrepancy_rmse(vec({1.0, 4.0}), vec({2.0, 2.0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(discrepancy_rmse(vec({1.0, 1.0, 1.0}), vec({2.0, 0.0, 1.0})) ==
        doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("discrepancy rmse: reference floor violations list the offending indices") {
  CHECK_THROWS_WITH_AS(discrepancy_rmse(vec({1.0, 0.0, 1.0, 1e-12}), vec({1.0, 1.0, 1.0, 1.0})),
                       doctest::Contains("indices 1, 3"), std::invalid_argument);
  CHECK_THROWS_AS(discrepancy_rmse(vec({1.0}), vec({1.0, 2.0})), std::invalid_argument);
}

TEST_CASE("discrepancy rmse: squared-denominator alternative") {
  // ((1-2)^2/4 + (4-2)^2/16) / 2 = 0.25
  CHECK(discrepancy_rmse(vec({2.0, 4.0}), vec({1.0, 2.0}), RmseDenominator::ReferenceSquared) ==
        doctest::Approx(std::sqrt((0.25 + 0.25) / 2.0)).epsilon(1e-15));
}

TEST_CASE("forrester pair: values and structure") {
  const auto problem = forrester_pair();
  CHECK(problem.dimension == 1);
  CHECK(problem.num_levels == 2);
  CHECK(problem.cost_ratios == std::vector<double>{0.125, 1.0});

  CHECK(problem.evaluate(vec({1.0}), 2) == doctest::Approx(16.0 * std::sin(8.0)).epsilon(1e-14));
  const double high_mid = problem.evaluate(vec({0.5}), 2);
  CHECK(problem.evaluate(vec({0.5}), 1) ==
        doctest::Approx(0.5 * high_mid - 5.0).epsilon(1e-14));
}

TEST_CASE("forrester pair: frozen optimum matches a brute-force search") {
  const auto problem = forrester_pair();
  double best_x = 0.0, best = std::numeric_limits<double>::infinity();
  const int n = 200000;
  for (int i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    const double y = problem.evaluate(vec({x}), 2);
    if (y < best) {
      best = y;
      best_x = x;
    }
  }
  // golden-section polish of the grid minimum
  double a = best_x - 1.0 / n, b = best_x + 1.0 / n;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (problem.evaluate(vec({c}), 2) < problem.evaluate(vec({d}), 2)) {
      b = d;
    } else {
      a = c;
    }
  }
  const double x_star = 0.5 * (a + b);
  const double f_star = problem.evaluate(vec({x_star}), 2);
  CHECK(std::abs(x_star - (*problem.optimum_x)[0]) < 1e-4);
  CHECK(std::abs(f_star - *problem.optimum_value) < 1e-4);
}

TEST_CASE("cross-regime problem: lower fidelities are trustworthy only at low regime values") {
  const auto problem = cross_regime_problem();
  REQUIRE(problem.num_levels == 3);

  double range_lo = std::numeric_limits<double>::infinity();
  double range_hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const double w = -1.0 + 2.0 * i / 49.0;
      const double M = 0.6 + 0.39 * j / 49.0;
      const double y = problem.evaluate(vec({w, M}), 3);
      range_lo = std::min(range_lo, y);
      range_hi = std::max(range_hi, y);
    }
  }

  double disc_low = 0.0, disc_high = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double w = -1.0 + 2.0 * i / 49.0;
    disc_low = std::max(disc_low, std::abs(problem.evaluate(vec({w, 0.6}), 1) -
                                           problem.evaluate(vec({w, 0.6}), 3)));
    disc_high = std::max(disc_high, std::abs(problem.evaluate(vec({w, 0.99}), 1) -
                                             problem.evaluate(vec({w, 0.99}), 3)));
  }
  CHECK(disc_low <= 0.05 * (range_hi - range_lo));
  CHECK(disc_high >= 10.0 * disc_low);
}

TEST_CASE("cross-regime problem: the regime variable is the second coordinate") {
  const auto problem = cross_regime_problem();
  const Eigen::VectorXd psi = problem.psi_extractor(vec({-0.3, 0.77}));
  REQUIRE(psi.size() == 1);
  CHECK(psi[0] == 0.77);
}

TEST_CASE("cross-regime problem: mean fidelity error shrinks as the level rises") {
  const auto problem = cross_regime_problem();
  double sum_low = 0.0, sum_mid = 0.0;
  int count = 0;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      const Eigen::VectorXd x = vec({-1.0 + 2.0 * i / 39.0, 0.6 + 0.39 * j / 39.0});
      const double top = problem.evaluate(x, 3);
      sum_low += std::abs(problem.evaluate(x, 1) - top);
      sum_mid += std::abs(problem.evaluate(x, 2) - top);
      ++count;
    }
  }
  CHECK(sum_low / count > sum_mid / count);
}

TEST_CASE("cross-regime problem: frozen optimum matches a brute-force search") {
  const auto problem = cross_regime_problem();
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x(2);
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const Eigen::VectorXd x = vec({-1.0 + 2.0 * i / 400.0, 0.6 + 0.39 * j / 400.0});
      const double y = problem.evaluate(x, 3);
      if (y < best) {
        best = y;
        best_x = x;
      }
    }
  }
  CHECK(std::abs(best - *problem.optimum_value) < 2e-4);
  CHECK((best_x - *problem.optimum_x).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("plate problem: the reference configuration has zero top-level discrepancy") {
  const Eigen::VectorXd q_true = vec({40.0, 250.0, 10.0, 5.0});
  const auto problem = plate_identification_problem(q_true);
  CHECK(problem.evaluate(q_true, 2) == 0.0);
  CHECK(problem.evaluate(q_true, 1) > 0.0);  // the smoothed view never matches exactly

  // discrepancy is non-negative everywhere
  for (double q3 : {0.5, 10.0, 25.0}) {
    for (double q4 : {1.0, 9.0, 19.0}) {
      CHECK(problem.evaluate(vec({30.0, 100.0, q3, q4}), 1) >= 0.0);
      CHECK(problem.evaluate(vec({30.0, 100.0, q3, q4}), 2) >= 0.0);
    }
  }
}

TEST_CASE("plate problem: the smoothed view confounds short high-load cuts with long ones") {
  const Eigen::VectorXd q_true = vec({40.0, 250.0, 2.0, 16.0});
  const auto problem = plate_identification_problem(q_true);

  // grid-search a pair (short cut, high load) vs (long cut, moderate load)
  // that the low fidelity cannot tell apart while the top level can
  double best_ratio = std::numeric_limits<double>::infinity();
  for (double q4b = 1.0; q4b <= 19.0; q4b += 0.5) {
    for (double q3b = 15.0; q3b <= 30.0; q3b += 1.0) {
      const Eigen::VectorXd a = vec({40.0, 250.0, 2.0, 16.0});
      const Eigen::VectorXd b = vec({40.0, 250.0, q3b, q4b});
      const double lf_gap = std::abs(problem.evaluate(a, 1) - problem.evaluate(b, 1));
      const double hf_gap = std::abs(problem.evaluate(a, 2) - problem.evaluate(b, 2));
      if (hf_gap > 1e-6) best_ratio = std::min(best_ratio, lf_gap / hf_gap);
    }
  }
  CHECK(best_ratio < 0.1);
}

TEST_CASE("plate problem: strain fields are strictly positive and deterministic") {
  const Eigen::VectorXd q = vec({51.0, 228.0, 12.0, 8.0});
  const auto field_once = plate_detail::strain_field(q, 1);
  const auto field_again = plate_detail::strain_field(q, 1);
  CHECK(field_once == field_again);
  CHECK(field_once.minCoeff() > 0.0);
  CHECK(field_once.size() == plate_detail::grid_size());
}

TEST_CASE("plate problem: ground truth must sit inside the bounds") {
  CHECK_THROWS_AS(plate_identification_problem(vec({40.0, 250.0, 40.0, 5.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(plate_identification_problem(vec({40.0, 250.0, 10.0, 25.0})),
                  std::invalid_argument);
}

TEST_CASE("every registered problem has ordered costs and deterministic evaluators") {
  for (const auto& name : registered_problems()) {
    const auto problem = make_problem(name, nlohmann::json::object());
    REQUIRE(problem.num_levels >= 1);
    CHECK(problem.cost_ratios.back() == 1.0);
    for (int l = 1; l < problem.num_levels; ++l) {
      CHECK(problem.cost_ratios[l - 1] < problem.cost_ratios[l]);
      CHECK(problem.cost_ratios[l - 1] > 0.0);
    }
    const Eigen::VectorXd mid = 0.5 * (problem.lower + problem.upper);
    for (int l = 1; l <= problem.num_levels; ++l) {
      CHECK(problem.evaluate(mid, l) == problem.evaluate(mid, l));
    }
    const auto manifest = problem.manifest();
    CHECK(manifest.at("dimension").get<int>() == problem.dimension);
    CHECK(manifest.at("num_levels").get<int>() == problem.num_levels);
  }
}

TEST_CASE("problem evaluation guards levels, bounds, and registry names") {
  const auto problem = forrester_pair();
  CHECK_THROWS_AS(problem.evaluate(vec({0.5}), 3), std::invalid_argument);
  CHECK_THROWS_AS(problem.evaluate(vec({1.5}), 1), std::domain_error);
  CHECK_THROWS_WITH_AS(make_problem("nonesuch", nlohmann::json::object()),
                       doctest::Contains("forrester"), std::invalid_argument);
}

TEST_CASE("restricting to the highest fidelity keeps only the top evaluator at unit cost") {
  const auto problem = cross_regime_problem();
  const auto restricted = restrict_to_highest(problem);
  CHECK(restricted.num_levels == 1);
  CHECK(restricted.cost_ratios == std::vector<double>{1.0});
  const Eigen::VectorXd x = vec({0.2, 0.8});
  CHECK(restricted.evaluate(x, 1) == problem.evaluate(x, 3));
}
