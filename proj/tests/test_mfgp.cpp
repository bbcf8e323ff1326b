#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dense_oracle.hpp"
#include "pamfbo/mfgp.hpp"
#include "pamfbo/random.hpp"
#include "pamfbo/sampling.hpp"
#include "pamfbo/serialization.hpp"

using namespace pamfbo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

LevelHyperparameters base_hyper(const Eigen::VectorXd& roughness, double variance) {
  LevelHyperparameters h;
  h.roughness = roughness;
  h.process_variance = variance;
  return h;
}

LevelHyperparameters upper_hyper(const Eigen::VectorXd& roughness, double variance, double scaling,
                                 double trend) {
  LevelHyperparameters h = base_hyper(roughness, variance);
  h.scaling = scaling;
  h.trend = trend;
  return h;
}

// 4 low + 2 high observations of a smooth pair on the unit interval
ObservationSet toy_two_level() {
  ObservationSet data(1, 2);
  for (double x : {0.1, 0.35, 0.6, 0.85}) {
    data.add(vec({x}), 1, std::sin(3.0 * x));
  }
  for (double x : {0.25, 0.75}) {
    data.add(vec({x}), 2, 2.0 * std::sin(3.0 * x) + 0.3);
  }
  return data;
}

std::vector<LevelHyperparameters> toy_hyper() {
  return {base_hyper(vec({4.0}), 1.5), upper_hyper(vec({6.0}), 0.4, 1.8, 0.25)};
}

}  // namespace

TEST_CASE("kernel matches the squared-exponential form") {
  CHECK(kernel(vec({0.3, -2.0}), vec({0.3, -2.0}), base_hyper(vec({1.0, 5.0}), 2.0)) == 2.0);
  CHECK(kernel(vec({0.0}), vec({1.0}), base_hyper(vec({1.0}), 1.0)) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(kernel(vec({0.0, 0.0}), vec({1.0, 1.0}), base_hyper(vec({1.0, 2.0}), 1.0)) ==
        doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(kernel(vec({0.0}), vec({0.0, 1.0}), base_hyper(vec({1.0}), 1.0)),
                  std::invalid_argument);
}

TEST_CASE("kernel is symmetric and bounded by the process variance") {
  Rng rng(7);
  const auto hyper = base_hyper(vec({0.5, 3.0, 8.0}), 1.7);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd a(3), b(3);
    for (int m = 0; m < 3; ++m) {
      a[m] = rng.uniform(-2.0, 2.0);
      b[m] = rng.uniform(-2.0, 2.0);
    }
    const double kab = kernel(a, b, hyper);
    CHECK(kab == kernel(b, a, hyper));
    CHECK(kab <= hyper.process_variance);
    CHECK(kab > 0.0);
  }
}

TEST_CASE("kernel matrix: single observation") {
  ObservationSet data(1, 1);
  data.add(vec({0.4}), 1, 1.0);
  const Eigen::MatrixXd k = assemble_kernel_matrix(data, {base_hyper(vec({1.0}), 1.0)}, 0.0);
  REQUIRE(k.rows() == 1);
  CHECK(k(0, 0) == 1.0);
}

TEST_CASE("kernel matrix: zero discrepancy at unit scaling gives a rank-1 block") {
  ObservationSet data(1, 2);
  data.add(vec({0.4}), 1, 1.0);
  data.add(vec({0.4}), 2, 1.0);
  const std::vector<LevelHyperparameters> hyper = {base_hyper(vec({1.0}), 1.3),
                                                   upper_hyper(vec({1.0}), 0.0, 1.0, 0.0)};
  const Eigen::MatrixXd k = assemble_kernel_matrix(data, hyper, 0.0);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(k(i, j) == doctest::Approx(1.3).epsilon(1e-15));
  }
}

TEST_CASE("kernel matrix matches the entrywise dense oracle") {
  ObservationSet data(1, 2);
  data.add(vec({0.1}), 1, 0.0);
  data.add(vec({0.7}), 1, 0.5);
  data.add(vec({0.4}), 2, 1.0);
  const std::vector<LevelHyperparameters> hyper = {base_hyper(vec({2.0}), 1.1),
                                                   upper_hyper(vec({3.0}), 0.6, 0.5, 0.1)};
  const double noise = 0.01;
  const Eigen::MatrixXd k = assemble_kernel_matrix(data, hyper, noise);
  const Eigen::MatrixXd expected = oracle::covariance_matrix(data, hyper, noise);
  CHECK((k - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("log marginal likelihood: closed-form single point") {
  ObservationSet data(1, 1);
  data.add(vec({0.5}), 1, 0.0);
  const double value = log_marginal_likelihood(data, {base_hyper(vec({1.0}), 1.0)}, 0.0);
  CHECK(value == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood: quadratic term scales with the square of the outputs") {
  ObservationSet data(1, 1), scaled(1, 1);
  const double c = 3.0;
  const std::vector<double> xs = {0.1, 0.5, 0.9};
  const std::vector<double> ys = {0.3, -0.2, 0.8};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    data.add(vec({xs[i]}), 1, ys[i]);
    scaled.add(vec({xs[i]}), 1, c * ys[i]);
  }
  const std::vector<LevelHyperparameters> hyper = {base_hyper(vec({4.0}), 1.0)};
  const Eigen::MatrixXd k = assemble_kernel_matrix(data, hyper, 0.0);
  Eigen::VectorXd y(3);
  for (int i = 0; i < 3; ++i) y[i] = ys[i];
  const double quad = y.dot(k.llt().solve(y));
  const double diff =
      log_marginal_likelihood(scaled, hyper, 0.0) - log_marginal_likelihood(data, hyper, 0.0);
  CHECK(diff == doctest::Approx(-0.5 * (c * c - 1.0) * quad).epsilon(1e-10));
}

TEST_CASE("log marginal likelihood agrees with the dense oracle on a 3x3 case") {
  ObservationSet data(1, 2);
  data.add(vec({0.15}), 1, 0.2);
  data.add(vec({0.8}), 1, -0.4);
  data.add(vec({0.5}), 2, 0.9);
  const std::vector<LevelHyperparameters> hyper = {base_hyper(vec({3.0}), 0.8),
                                                   upper_hyper(vec({5.0}), 0.3, 1.2, -0.1)};
  const double noise = 0.05;
  CHECK(log_marginal_likelihood(data, hyper, noise) ==
        doctest::Approx(oracle::log_likelihood(data, hyper, noise)).epsilon(1e-10));
}

TEST_CASE("noise-free predictions interpolate the training data") {
  const ObservationSet data = toy_two_level();
  const MfGpModel model(data, toy_hyper(), 0.0, vec({0.0}), vec({1.0}));
  for (const auto& obs : data.observations()) {
    const PosteriorStats stats = model.predict(obs.x, obs.level);
    CHECK(std::abs(stats.mean - obs.y) < 1e-6);
    CHECK(stats.variance >= 0.0);
    CHECK(stats.variance < 1e-8);
  }
}

TEST_CASE("single-level posterior equals a plain GP oracle") {
  ObservationSet data(1, 1);
  for (double x : {0.05, 0.3, 0.55, 0.8}) data.add(vec({x}), 1, std::cos(2.0 * x));
  const std::vector<LevelHyperparameters> hyper = {base_hyper(vec({6.0}), 1.2)};
  const double noise = 0.01;
  const MfGpModel model(data, hyper, noise, vec({0.0}), vec({1.0}));
  for (double x : {0.0, 0.2, 0.47, 0.92}) {
    const auto stats = model.predict(vec({x}), 1);
    const auto expected = oracle::posterior(data, hyper, noise, vec({x}), 1);
    CHECK(stats.mean == doctest::Approx(expected.mean).epsilon(1e-9));
    CHECK(stats.variance == doctest::Approx(expected.variance).epsilon(1e-8));
  }
}

TEST_CASE("two-level posterior matches the dense oracle") {
  const ObservationSet data = toy_two_level();
  const auto hyper = toy_hyper();
  const MfGpModel model(data, hyper, 0.0, vec({0.0}), vec({1.0}));
  for (double x : {0.05, 0.2, 0.5, 0.7, 0.95}) {
    for (int level = 1; level <= 2; ++level) {
      const auto stats = model.predict(vec({x}), level);
      const auto expected = oracle::posterior(data, hyper, 0.0, vec({x}), level);
      CHECK(std::abs(stats.mean - expected.mean) < 1e-8 * std::max(1.0, std::abs(expected.mean)));
      CHECK(std::abs(stats.variance - expected.variance) <
            1e-8 * std::max(1.0, std::abs(expected.variance)));
    }
  }
}

TEST_CASE("posterior correlation: top level, zero-discrepancy, and oracle cases") {
  const ObservationSet data = toy_two_level();
  const auto hyper = toy_hyper();
  const MfGpModel model(data, hyper, 0.0, vec({0.0}), vec({1.0}));

  SUBCASE("top level is perfectly correlated with itself") {
    CHECK(model.posterior_correlation(vec({0.5}), 2) == 1.0);
  }

  SUBCASE("matches the dense oracle ratio at lower levels") {
    for (double x : {0.2, 0.5, 0.9}) {
      const auto expected = oracle::posterior(data, hyper, 0.0, vec({x}), 1);
      const auto top = oracle::posterior(data, hyper, 0.0, vec({x}), 2);
      const double want = expected.cross_with_top / std::sqrt(expected.variance * top.variance);
      CHECK(model.posterior_correlation(vec({x}), 1) == doctest::Approx(want).epsilon(1e-8));
    }
  }

  SUBCASE("resolved points report zero correlation") {
    CHECK(model.posterior_correlation(vec({0.25}), 1) == 0.0);
  }

  SUBCASE("a zero-discrepancy hierarchy is perfectly correlated everywhere") {
    ObservationSet flat(1, 2);
    flat.add(vec({0.2}), 1, 0.4);
    flat.add(vec({0.8}), 1, -0.1);
    flat.add(vec({0.5}), 2, 0.2);
    const std::vector<LevelHyperparameters> zero_disc = {base_hyper(vec({4.0}), 1.0),
                                                         upper_hyper(vec({4.0}), 0.0, 1.0, 0.0)};
    const MfGpModel twin(flat, zero_disc, 0.0, vec({0.0}), vec({1.0}));
    for (double x : {0.1, 0.45, 0.66, 0.99}) {
      CHECK(twin.posterior_correlation(vec({x}), 1) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("conditioning on one more observation never raises its own variance") {
  const auto hyper = toy_hyper();
  const ObservationSet data = toy_two_level();
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = vec({rng.uniform()});
    const int level = 1 + static_cast<int>(rng.integer(2));
    const MfGpModel before(data, hyper, 0.0, vec({0.0}), vec({1.0}));
    const double var_before = before.predict(x, level).variance;

    ObservationSet extended = data;
    extended.add(x, level, rng.uniform(-2.0, 2.0));
    const MfGpModel after(extended, hyper, 0.0, vec({0.0}), vec({1.0}));
    const double var_after = after.predict(x, level).variance;
    CHECK(var_after <= var_before + 1e-10);
  }
}

TEST_CASE("duplicate observations are rejected at insertion") {
  ObservationSet data(2, 2);
  data.add(vec({0.5, 0.5}), 1, 1.0);
  CHECK_THROWS_AS(data.add(vec({0.5, 0.5}), 1, 2.0), std::invalid_argument);
  CHECK_NOTHROW(data.add(vec({0.5, 0.5}), 2, 2.0));  // same site, different fidelity
}

TEST_CASE("fit interpolates a noise-free linear function") {
  ObservationSet data(1, 1);
  for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) data.add(vec({x}), 1, x);
  FitConfig config;
  config.lower = vec({0.0});
  config.upper = vec({1.0});
  const MfGpModel model = MfGpModel::fit(data, 0.0, config);
  for (const auto& obs : data.observations()) {
    CHECK(std::abs(model.predict(obs.x, 1).mean - obs.y) < 1e-6);
  }
}

TEST_CASE("fit recovers the generating scale factor between levels") {
  ObservationSet data(1, 2);
  auto f = [](double x) { return std::sin(4.0 * x) + 0.5 * x; };
  for (int i = 0; i < 9; ++i) {
    const double x = i / 8.0;
    data.add(vec({x}), 1, f(x));
  }
  for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    data.add(vec({x}), 2, 2.0 * f(x));  // exactly scaled, zero discrepancy
  }
  FitConfig config;
  config.lower = vec({0.0});
  config.upper = vec({1.0});
  const MfGpModel model = MfGpModel::fit(data, 0.0, config);
  CHECK(model.hyperparameters()[1].scaling.value() == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("fit returns at least the best simplex seed at every level") {
  const ObservationSet data = toy_two_level();
  FitConfig config;
  config.lower = vec({0.0});
  config.upper = vec({1.0});
  const MfGpModel model = MfGpModel::fit(data, 0.0, config);
  REQUIRE(model.fit_reports().size() == 2);
  for (const auto& report : model.fit_reports()) {
    CHECK(!report.seed_values.empty());
    for (double seed_value : report.seed_values) {
      CHECK(report.best_value >= seed_value);
    }
  }
}

TEST_CASE("fit requires two observations per level") {
  ObservationSet data(1, 2);
  data.add(vec({0.2}), 1, 0.0);
  data.add(vec({0.8}), 1, 1.0);
  data.add(vec({0.5}), 2, 0.5);
  FitConfig config;
  config.lower = vec({0.0});
  config.upper = vec({1.0});
  CHECK_THROWS_WITH_AS(MfGpModel::fit(data, 0.0, config),
                       doctest::Contains("at least 2 observations at level 2"),
                       std::invalid_argument);
}

TEST_CASE("serialized models reload to matching predictions") {
  const ObservationSet data = toy_two_level();
  const MfGpModel model(data, toy_hyper(), 0.0, vec({0.0}), vec({1.0}));
  const MfGpModel reloaded = model_from_json(model_to_json(model));
  for (double x : {0.12, 0.41, 0.77}) {
    for (int level = 1; level <= 2; ++level) {
      const auto a = model.predict(vec({x}), level);
      const auto b = reloaded.predict(vec({x}), level);
      CHECK(std::abs(a.mean - b.mean) < 1e-12);
      CHECK(std::abs(a.variance - b.variance) < 1e-12);
    }
  }
}

TEST_CASE("randomized instances agree with the dense oracle") {
  Rng rng(2024);
  for (int instance = 0; instance < 10; ++instance) {
    const int d = 1 + static_cast<int>(rng.integer(3));
    const int L = 1 + static_cast<int>(rng.integer(3));
    const int n = L + static_cast<int>(rng.integer(10 - L + 1));

    const auto points = latin_hypercube(n, d, Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d),
                                        rng.integer(1ull << 30));
    ObservationSet data(d, L);
    for (int i = 0; i < n; ++i) {
      const int level = i < L ? i + 1 : 1 + static_cast<int>(rng.integer(L));
      data.add(points[i], level, rng.uniform(-2.0, 2.0));
    }

    std::vector<LevelHyperparameters> hyper;
    for (int l = 0; l < L; ++l) {
      Eigen::VectorXd roughness(d);
      for (int m = 0; m < d; ++m) roughness[m] = rng.uniform(8.0, 60.0);
      LevelHyperparameters h = base_hyper(roughness, rng.uniform(0.3, 3.0));
      if (l > 0) {
        h.scaling = rng.uniform(-2.0, 2.0);
        h.trend = rng.uniform(-1.0, 1.0);
      }
      hyper.push_back(std::move(h));
    }
    const double noise = rng.integer(2) == 0 ? 0.0 : 0.01;

    const MfGpModel model(data, hyper, noise, Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d));
    for (int q = 0; q < 4; ++q) {
      Eigen::VectorXd x(d);
      for (int m = 0; m < d; ++m) x[m] = rng.uniform();
      const int level = 1 + static_cast<int>(rng.integer(L));
      const auto stats = model.predict(x, level);
      const auto expected = oracle::posterior(data, hyper, noise, x, level);
      CHECK(std::abs(stats.mean - expected.mean) < 1e-8 * std::max(1.0, std::abs(expected.mean)));
      CHECK(std::abs(stats.variance - std::max(expected.variance, 0.0)) <
            1e-8 * std::max(1.0, std::abs(expected.variance)));
    }
  }
}
