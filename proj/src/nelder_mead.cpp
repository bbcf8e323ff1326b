#include "pamfbo/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace pamfbo {

namespace {

Eigen::VectorXd clamp_to_box(Eigen::VectorXd x, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper) {
  for (int m = 0; m < x.size(); ++m) {
    x[m] = std::min(std::max(x[m], lower[m]), upper[m]);
  }
  return x;
}

}  // namespace

NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                                      const Eigen::VectorXd& upper,
                                      const NelderMeadOptions& options) {
  const int d = static_cast<int>(start.size());
  if (d < 1 || lower.size() != d || upper.size() != d) {
    throw std::invalid_argument("nelder_mead_minimize: dimension mismatch");
  }
  const int max_evals = options.max_evals > 0 ? options.max_evals : 60 * d + 60;
  const Eigen::VectorXd width = upper - lower;

  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  // initial simplex: start plus one step along each axis, flipped at the box edge
  std::vector<Eigen::VectorXd> simplex;
  simplex.push_back(clamp_to_box(start, lower, upper));
  for (int m = 0; m < d; ++m) {
    Eigen::VectorXd v = simplex[0];
    double step = options.init_step * width[m];
    if (v[m] + step > upper[m]) step = -step;
    v[m] += step;
    simplex.push_back(clamp_to_box(v, lower, upper));
  }

  std::vector<double> values(d + 1);
  for (int i = 0; i <= d; ++i) values[i] = eval(simplex[i]);

  NelderMeadResult best;
  best.x = simplex[0];
  best.value = values[0];
  auto track = [&](const Eigen::VectorXd& x, double v) {
    if (v < best.value) {
      best.x = x;
      best.value = v;
    }
  };
  for (int i = 1; i <= d; ++i) track(simplex[i], values[i]);

  std::vector<int> order(d + 1);
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] < values[b]; });
    const int lo = order[0], hi = order[d], nh = order[d - 1];

    // convergence: value spread and simplex size
    const double spread = values[hi] - values[lo];
    if (std::isfinite(spread) && spread <= options.f_tol * (1.0 + std::abs(values[lo]))) break;
    double diam = 0.0;
    for (int i = 1; i <= d; ++i) {
      for (int m = 0; m < d; ++m) {
        diam = std::max(diam, std::abs(simplex[order[i]][m] - simplex[lo][m]) / width[m]);
      }
    }
    if (diam <= options.x_tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i <= d; ++i) {
      if (i != hi) centroid += simplex[i];
    }
    centroid /= d;

    const Eigen::VectorXd reflected = clamp_to_box(centroid + (centroid - simplex[hi]), lower, upper);
    const double fr = eval(reflected);
    track(reflected, fr);

    if (fr < values[lo]) {
      const Eigen::VectorXd expanded =
          clamp_to_box(centroid + 2.0 * (centroid - simplex[hi]), lower, upper);
      const double fe = eval(expanded);
      track(expanded, fe);
      if (fe < fr) {
        simplex[hi] = expanded;
        values[hi] = fe;
      } else {
        simplex[hi] = reflected;
        values[hi] = fr;
      }
    } else if (fr < values[nh]) {
      simplex[hi] = reflected;
      values[hi] = fr;
    } else {
      const bool outside = fr < values[hi];
      const Eigen::VectorXd& toward = outside ? reflected : simplex[hi];
      const Eigen::VectorXd contracted = clamp_to_box(centroid + 0.5 * (toward - centroid), lower, upper);
      const double fc = eval(contracted);
      track(contracted, fc);
      if (fc < std::min(fr, values[hi])) {
        simplex[hi] = contracted;
        values[hi] = fc;
      } else {
        // shrink toward the best vertex
        for (int i = 0; i <= d; ++i) {
          if (i == lo) continue;
          simplex[i] = clamp_to_box(simplex[lo] + 0.5 * (simplex[i] - simplex[lo]), lower, upper);
          values[i] = eval(simplex[i]);
          track(simplex[i], values[i]);
          if (evals >= max_evals) break;
        }
      }
    }
  }

  best.evals = evals;
  return best;
}

}  // namespace pamfbo
