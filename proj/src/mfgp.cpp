#include "pamfbo/mfgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pamfbo/nelder_mead.hpp"
#include "pamfbo/sampling.hpp"

namespace pamfbo {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kWorstLikelihood = -std::numeric_limits<double>::infinity();

void check_hyper_shape(const std::vector<LevelHyperparameters>& hyper, int dimension,
                       int num_levels) {
  if (static_cast<int>(hyper.size()) != num_levels) {
    throw std::invalid_argument("hyperparameter list must have one entry per level");
  }
  for (int l = 0; l < num_levels; ++l) {
    if (hyper[l].roughness.size() != dimension) {
      throw std::invalid_argument("roughness dimension mismatch at level " + std::to_string(l + 1));
    }
    if (!hyper[l].roughness.allFinite() || !std::isfinite(hyper[l].process_variance)) {
      throw std::invalid_argument("non-finite hyperparameters at level " + std::to_string(l + 1));
    }
    if (l > 0 && !hyper[l].scaling.has_value()) {
      throw std::invalid_argument("missing scaling factor at level " + std::to_string(l + 1));
    }
  }
}

// chain(a, b) = product of scaling factors linking level a to level b, 0-based
Eigen::MatrixXd scaling_chain(const std::vector<LevelHyperparameters>& hyper) {
  const int L = static_cast<int>(hyper.size());
  Eigen::MatrixXd chain = Eigen::MatrixXd::Ones(L, L);
  for (int a = 0; a < L; ++a) {
    for (int b = a + 1; b < L; ++b) {
      chain(a, b) = chain(a, b - 1) * hyper[b].scaling.value();
    }
  }
  return chain;
}

Eigen::VectorXd prior_mean_per_level(const std::vector<LevelHyperparameters>& hyper) {
  const int L = static_cast<int>(hyper.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(L);
  for (int l = 1; l < L; ++l) {
    mean[l] = hyper[l].scaling.value() * mean[l - 1] + hyper[l].trend.value_or(0.0);
  }
  return mean;
}

Eigen::VectorXd prior_variance_per_level(const std::vector<LevelHyperparameters>& hyper) {
  const int L = static_cast<int>(hyper.size());
  Eigen::VectorXd var(L);
  var[0] = hyper[0].process_variance;
  for (int l = 1; l < L; ++l) {
    const double rho = hyper[l].scaling.value();
    var[l] = rho * rho * var[l - 1] + hyper[l].process_variance;
  }
  return var;
}

// pairwise covariance of one level's process over the rows of X
Eigen::MatrixXd process_covariance(const Eigen::MatrixXd& X, const LevelHyperparameters& hyper) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (int m = 0; m < X.cols(); ++m) {
    const Eigen::VectorXd c = X.col(m);
    Eigen::MatrixXd diff = c.replicate(1, n) - c.transpose().replicate(n, 1);
    s.noalias() += hyper.roughness[m] * diff.cwiseProduct(diff);
  }
  return hyper.process_variance * (-s.array()).exp();
}

Eigen::MatrixXd assemble_covariance(const Eigen::MatrixXd& X, const std::vector<int>& levels,
                                    const std::vector<LevelHyperparameters>& hyper,
                                    double noise_variance) {
  const int n = static_cast<int>(X.rows());
  const int L = static_cast<int>(hyper.size());
  const Eigen::MatrixXd chain = scaling_chain(hyper);

  // level covariances accumulated up the recursion
  std::vector<Eigen::MatrixXd> levelcov(L);
  levelcov[0] = process_covariance(X, hyper[0]);
  for (int l = 1; l < L; ++l) {
    const double rho = hyper[l].scaling.value();
    levelcov[l] = rho * rho * levelcov[l - 1] + process_covariance(X, hyper[l]);
  }

  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const int a = std::min(levels[i], levels[j]) - 1;
      const int b = std::max(levels[i], levels[j]) - 1;
      const double v = chain(a, b) * levelcov[a](i, j);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  K.diagonal().array() += noise_variance;
  if (!K.allFinite()) {
    throw std::runtime_error("kernel matrix has non-finite entries");
  }
  return K;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
              const LevelHyperparameters& hyper) {
  if (x.size() != x2.size() || x.size() != hyper.roughness.size()) {
    throw std::invalid_argument("kernel: dimension mismatch");
  }
  double s = 0.0;
  for (int m = 0; m < x.size(); ++m) {
    const double d = x[m] - x2[m];
    s += hyper.roughness[m] * d * d;
  }
  return hyper.process_variance * std::exp(-s);
}

Eigen::MatrixXd assemble_kernel_matrix(const ObservationSet& data,
                                       const std::vector<LevelHyperparameters>& hyper,
                                       double noise_variance) {
  if (data.empty()) throw std::invalid_argument("assemble_kernel_matrix: empty dataset");
  check_hyper_shape(hyper, data.dimension(), data.num_levels());
  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd X(n, data.dimension());
  std::vector<int> levels(n);
  for (int i = 0; i < n; ++i) {
    X.row(i) = data[i].x;
    levels[i] = data[i].level;
  }
  return assemble_covariance(X, levels, hyper, noise_variance);
}

double log_marginal_likelihood(const ObservationSet& data,
                               const std::vector<LevelHyperparameters>& hyper,
                               double noise_variance) {
  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd A;
  try {
    A = assemble_kernel_matrix(data, hyper, noise_variance);
  } catch (const std::runtime_error&) {
    return kWorstLikelihood;
  }
  const Eigen::VectorXd level_mean = prior_mean_per_level(hyper);
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) {
    r[i] = data[i].y - level_mean[data[i].level - 1];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return kWorstLikelihood;
  const double quad = r.dot(llt.solve(r));
  const double value = -0.5 * quad - 0.5 * log_det_from_llt(llt) - 0.5 * n * kLog2Pi;
  return std::isfinite(value) ? value : kWorstLikelihood;
}

MfGpModel::MfGpModel(ObservationSet data, std::vector<LevelHyperparameters> hyper,
                     double noise_variance, Eigen::VectorXd lower, Eigen::VectorXd upper)
    : data_(std::move(data)),
      hyper_(std::move(hyper)),
      noise_variance_(noise_variance),
      lower_(std::move(lower)),
      upper_(std::move(upper)) {
  if (data_.empty()) throw std::invalid_argument("model requires at least one observation");
  if (noise_variance_ < 0.0 || !std::isfinite(noise_variance_)) {
    throw std::invalid_argument("noise variance must be finite and non-negative");
  }
  const int d = data_.dimension();
  if (lower_.size() != d || upper_.size() != d) {
    throw std::invalid_argument("model bounds dimension mismatch");
  }
  for (int m = 0; m < d; ++m) {
    if (!(lower_[m] < upper_[m])) throw std::invalid_argument("model bounds must be increasing");
  }
  check_hyper_shape(hyper_, d, data_.num_levels());

  const int n = static_cast<int>(data_.size());
  x_scaled_.resize(n, d);
  levels_.resize(n);
  y_.resize(n);
  for (int i = 0; i < n; ++i) {
    x_scaled_.row(i) = scale_point(data_[i].x);
    levels_[i] = data_[i].level;
    y_[i] = data_[i].y;
  }
  chain_ = scaling_chain(hyper_);
  prior_mean_ = prior_mean_per_level(hyper_);
  prior_var_ = prior_variance_per_level(hyper_);
  mean_vector_.resize(n);
  for (int i = 0; i < n; ++i) mean_vector_[i] = prior_mean_[levels_[i] - 1];
  factorize();
}

Eigen::VectorXd MfGpModel::scale_point(const Eigen::VectorXd& x) const {
  return (x - lower_).cwiseQuotient(upper_ - lower_);
}

void MfGpModel::factorize() {
  const int n = static_cast<int>(data_.size());
  kernel_noise_ = assemble_covariance(x_scaled_, levels_, hyper_, noise_variance_);
  double trace_scale = (kernel_noise_.trace() - n * noise_variance_) / n;
  if (!(trace_scale > 0.0)) trace_scale = 1.0;

  // adaptive jitter: start at the floor, escalate x10 until the ceiling
  double jitter = 1e-10 * trace_scale;
  const double jitter_max = 1e-4 * trace_scale;
  for (;;) {
    Eigen::MatrixXd A = kernel_noise_;
    A.diagonal().array() += jitter;
    llt_.compute(A);
    if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().allFinite()) {
      jitter_used_ = jitter;
      break;
    }
    jitter *= 10.0;
    if (jitter > jitter_max) {
      throw std::runtime_error("kernel matrix is singular even at maximum jitter");
    }
  }
  alpha_ = solve_system(y_ - mean_vector_, 24);
}

Eigen::VectorXd MfGpModel::solve_system(const Eigen::VectorXd& rhs, int max_refinements) const {
  Eigen::VectorXd solution = llt_.solve(rhs);
  Eigen::VectorXd residual = rhs - kernel_noise_ * solution;
  double best_norm = residual.norm();
  Eigen::VectorXd best = solution;
  const double target = 1e-15 * rhs.norm();
  for (int step = 0; step < max_refinements && best_norm > target; ++step) {
    solution += llt_.solve(residual);
    residual = rhs - kernel_noise_ * solution;
    const double norm = residual.norm();
    if (!std::isfinite(norm) || norm >= best_norm) break;
    best_norm = norm;
    best = solution;
  }
  return best;
}

Eigen::MatrixXd MfGpModel::cross_covariance_all(const Eigen::VectorXd& x_scaled) const {
  const int n = static_cast<int>(data_.size());
  const int L = num_levels();

  // per-level process covariances between x and every training row
  Eigen::MatrixXd proc(n, L);
  Eigen::ArrayXXd diff = (x_scaled_.rowwise() - x_scaled.transpose()).array();
  Eigen::ArrayXXd diff2 = diff.square();
  for (int u = 0; u < L; ++u) {
    Eigen::ArrayXd s = (diff2.matrix() * hyper_[u].roughness).array();
    proc.col(u) = hyper_[u].process_variance * (-s).exp();
  }

  Eigen::MatrixXd out(n, L);
  Eigen::VectorXd running(L);
  for (int i = 0; i < n; ++i) {
    running[0] = proc(i, 0);
    for (int l = 1; l < L; ++l) {
      const double rho = hyper_[l].scaling.value();
      running[l] = rho * rho * running[l - 1] + proc(i, l);
    }
    const int li = levels_[i] - 1;
    for (int l = 0; l < L; ++l) {
      const int a = std::min(l, li);
      const int b = std::max(l, li);
      out(i, l) = chain_(a, b) * running[a];
    }
  }
  return out;
}

PosteriorBundle MfGpModel::posterior_bundle(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) {
    throw std::invalid_argument("predict: point dimension mismatch");
  }
  const int L = num_levels();
  const Eigen::MatrixXd cc = cross_covariance_all(scale_point(x));
  Eigen::MatrixXd w(cc.rows(), L);
  for (int l = 0; l < L; ++l) w.col(l) = solve_system(cc.col(l));

  PosteriorBundle bundle;
  bundle.mean.resize(L);
  bundle.variance.resize(L);
  bundle.cross_with_top.resize(L);
  bundle.resolved_tol = resolved_variance_tol();
  for (int l = 0; l < L; ++l) {
    bundle.mean[l] = prior_mean_[l] + cc.col(l).dot(alpha_);
    bundle.variance[l] = std::max(prior_var_[l] - cc.col(l).dot(w.col(l)), 0.0);
    bundle.cross_with_top[l] = chain_(l, L - 1) * prior_var_[l] - cc.col(l).dot(w.col(L - 1));
  }
  return bundle;
}

PosteriorStats MfGpModel::predict(const Eigen::VectorXd& x, int level) const {
  if (level < 1 || level > num_levels()) {
    throw std::invalid_argument("predict: level out of range");
  }
  const PosteriorBundle bundle = posterior_bundle(x);
  return {bundle.mean[level - 1], bundle.variance[level - 1]};
}

double MfGpModel::posterior_correlation(const Eigen::VectorXd& x, int level) const {
  const int L = num_levels();
  if (level < 1 || level > L) {
    throw std::invalid_argument("posterior_correlation: level out of range");
  }
  const PosteriorBundle bundle = posterior_bundle(x);
  const double var_l = bundle.variance[level - 1];
  const double var_top = bundle.variance[L - 1];
  if (level == L) return var_top > bundle.resolved_tol ? 1.0 : 0.0;
  if (var_l < bundle.resolved_tol || var_top < bundle.resolved_tol) return 0.0;
  const double corr = bundle.cross_with_top[level - 1] / std::sqrt(var_l * var_top);
  return std::clamp(corr, -1.0, 1.0);
}

double MfGpModel::joint_log_likelihood() const {
  const int n = static_cast<int>(data_.size());
  const double quad = (y_ - mean_vector_).dot(alpha_);
  return -0.5 * quad - 0.5 * log_det_from_llt(llt_) - 0.5 * n * kLog2Pi;
}

// ---------------------------------------------------------------------------
// Maximum likelihood fitting
// ---------------------------------------------------------------------------

class MfGpFitter {
 public:
  MfGpFitter(const ObservationSet& data, double noise_variance, const FitConfig& config)
      : data_(data), noise_(noise_variance), cfg_(config), d_(data.dimension()),
        num_levels_(data.num_levels()) {
    if (cfg_.lower.size() != d_ || cfg_.upper.size() != d_) {
      throw std::invalid_argument("fit: bounds dimension mismatch");
    }
    for (int l = 1; l <= num_levels_; ++l) {
      if (data_.count_at_level(l) < 2) {
        throw std::invalid_argument("fit: need at least 2 observations at level " +
                                    std::to_string(l) + ", have " +
                                    std::to_string(data_.count_at_level(l)));
      }
    }
  }

  MfGpModel run() {
    std::vector<LevelHyperparameters> hyper;
    std::vector<LevelFitReport> reports;
    for (int level = 1; level <= num_levels_; ++level) {
      auto [level_hyper, report] = fit_level(level, hyper);
      hyper.push_back(std::move(level_hyper));
      reports.push_back(std::move(report));
    }
    MfGpModel model(data_, std::move(hyper), noise_, cfg_.lower, cfg_.upper);
    model.fit_reports_ = std::move(reports);
    return model;
  }

 private:
  struct LevelData {
    Eigen::MatrixXd x_scaled;              // rows at this level, unit box
    Eigen::VectorXd y;
    std::vector<Eigen::MatrixXd> sq_diff;  // per-dimension squared differences
  };

  LevelData gather_level(int level) const {
    LevelData out;
    const int count = data_.count_at_level(level);
    out.x_scaled.resize(count, d_);
    out.y.resize(count);
    int k = 0;
    for (const auto& obs : data_.observations()) {
      if (obs.level != level) continue;
      out.x_scaled.row(k) = (obs.x - cfg_.lower).cwiseQuotient(cfg_.upper - cfg_.lower);
      out.y[k] = obs.y;
      ++k;
    }
    out.sq_diff.reserve(d_);
    for (int m = 0; m < d_; ++m) {
      const Eigen::VectorXd c = out.x_scaled.col(m);
      Eigen::MatrixXd diff = c.replicate(1, count) - c.transpose().replicate(count, 1);
      out.sq_diff.push_back(diff.cwiseProduct(diff));
    }
    return out;
  }

  // correlation-scaled covariance at the candidate point, with noise added
  Eigen::MatrixXd level_covariance(const LevelData& ld, const Eigen::VectorXd& log_roughness,
                                   double log_variance) const {
    const int n = static_cast<int>(ld.y.size());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (int m = 0; m < d_; ++m) {
      s.noalias() += std::exp(log_roughness[m]) * ld.sq_diff[m];
    }
    Eigen::MatrixXd c = std::exp(log_variance) * (-s.array()).exp();
    c.diagonal().array() += noise_;
    return c;
  }

  // log likelihood of residuals r under covariance C, with adaptive jitter;
  // beta_out receives the generalized-least-squares trend when requested
  double gaussian_loglik(Eigen::MatrixXd c, const Eigen::VectorXd& r, double variance_scale,
                         bool with_trend, double* beta_out) const {
    const int n = static_cast<int>(r.size());
    double jitter = cfg_.jitter_floor * variance_scale;
    const double jitter_max = cfg_.jitter_ceil * variance_scale;
    for (;;) {
      Eigen::MatrixXd a = c;
      a.diagonal().array() += jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) {
        Eigen::VectorXd resid = r;
        double beta = 0.0;
        if (with_trend) {
          const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
          const Eigen::VectorXd cinv_ones = llt.solve(ones);
          const double denom = ones.dot(cinv_ones);
          if (!(denom > 0.0)) return kWorstLikelihood;
          beta = r.dot(cinv_ones) / denom;
          resid.array() -= beta;
        }
        if (beta_out != nullptr) *beta_out = beta;
        const double quad = resid.dot(llt.solve(resid));
        const double value = -0.5 * quad - 0.5 * log_det_from_llt(llt) - 0.5 * n * kLog2Pi;
        return std::isfinite(value) ? value : kWorstLikelihood;
      }
      jitter = jitter > 0.0 ? jitter * 10.0 : 1e-12;
      if (jitter > jitter_max) return kWorstLikelihood;
    }
  }

  std::vector<Eigen::VectorXd> simplex_starts(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                              int level) const {
    std::vector<Eigen::VectorXd> starts;
    const int p = static_cast<int>(lo.size());
    for (int s = 0; s < cfg_.num_starts; ++s) {
      Eigen::VectorXd u = halton_point(static_cast<std::uint64_t>(s) + 1, p);
      starts.push_back(lo + u.cwiseProduct(hi - lo));
    }
    if (static_cast<int>(cfg_.warm_start.size()) == num_levels_) {
      const LevelHyperparameters& w = cfg_.warm_start[level - 1];
      if (w.roughness.size() == d_ && w.process_variance > 0.0) {
        Eigen::VectorXd theta(p);
        for (int m = 0; m < d_; ++m) {
          theta[m] = std::log(std::max(w.roughness[m], 1e-300));
        }
        theta[d_] = std::log(std::max(w.process_variance, 1e-300));
        if (p > d_ + 1) theta[d_ + 1] = w.scaling.value_or(1.0);
        starts.push_back(theta.cwiseMax(lo).cwiseMin(hi));
      }
    }
    return starts;
  }

  std::pair<LevelHyperparameters, LevelFitReport> fit_level(
      int level, const std::vector<LevelHyperparameters>& lower_hyper) const {
    const LevelData ld = gather_level(level);
    const bool base = level == 1;

    // discrepancy fits condition on the posterior of the hierarchy below
    Eigen::VectorXd m_prev;
    if (!base) {
      ObservationSet partial(d_, level - 1);
      for (const auto& obs : data_.observations()) {
        if (obs.level < level) partial.add(obs);
      }
      MfGpModel below(std::move(partial), lower_hyper, noise_, cfg_.lower, cfg_.upper);
      const int count = static_cast<int>(ld.y.size());
      m_prev.resize(count);
      int k = 0;
      for (const auto& obs : data_.observations()) {
        if (obs.level != level) continue;
        m_prev[k++] = below.predict(obs.x, level - 1).mean;
      }
    }

    const int p = base ? d_ + 1 : d_ + 2;
    Eigen::VectorXd lo(p), hi(p);
    lo.head(d_).setConstant(cfg_.log_roughness_lo);
    hi.head(d_).setConstant(cfg_.log_roughness_hi);
    lo[d_] = cfg_.log_variance_lo;
    hi[d_] = cfg_.log_variance_hi;
    if (!base) {
      lo[d_ + 1] = cfg_.scaling_lo;
      hi[d_ + 1] = cfg_.scaling_hi;
    }

    auto objective = [&](const Eigen::VectorXd& theta) {
      const Eigen::MatrixXd c = level_covariance(ld, theta.head(d_), theta[d_]);
      const double scale = std::exp(theta[d_]);
      if (base) {
        return -gaussian_loglik(c, ld.y, scale, false, nullptr);
      }
      const Eigen::VectorXd r = ld.y - theta[d_ + 1] * m_prev;
      return -gaussian_loglik(c, r, scale, true, nullptr);
    };

    NelderMeadOptions nm;
    nm.max_evals = cfg_.max_simplex_evals > 0 ? cfg_.max_simplex_evals : 50 * p + 50;
    nm.f_tol = 1e-7;
    nm.x_tol = 1e-7;

    LevelFitReport report;
    Eigen::VectorXd best_theta;
    double best_value = kWorstLikelihood;
    for (const Eigen::VectorXd& start : simplex_starts(lo, hi, level)) {
      report.seed_values.push_back(-objective(start));
      const NelderMeadResult res = nelder_mead_minimize(objective, start, lo, hi, nm);
      report.evals += res.evals;
      if (-res.value > best_value) {
        best_value = -res.value;
        best_theta = res.x;
      }
    }
    if (!std::isfinite(best_value)) {
      throw std::runtime_error("fit: kernel matrix is singular even at maximum jitter at level " +
                               std::to_string(level));
    }
    report.best_value = best_value;

    LevelHyperparameters hyper;
    hyper.roughness = best_theta.head(d_).array().exp();
    hyper.process_variance = std::exp(best_theta[d_]);
    if (!base) {
      hyper.scaling = best_theta[d_ + 1];
      const Eigen::MatrixXd c = level_covariance(ld, best_theta.head(d_), best_theta[d_]);
      const Eigen::VectorXd r = ld.y - best_theta[d_ + 1] * m_prev;
      double beta = 0.0;
      gaussian_loglik(c, r, hyper.process_variance, true, &beta);
      hyper.trend = beta;
    }
    return {std::move(hyper), std::move(report)};
  }

  const ObservationSet& data_;
  double noise_;
  FitConfig cfg_;
  int d_;
  int num_levels_;
};

MfGpModel MfGpModel::fit(const ObservationSet& data, double noise_variance,
                         const FitConfig& config) {
  return MfGpFitter(data, noise_variance, config).run();
}

}  // namespace pamfbo
