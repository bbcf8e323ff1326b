#include "pamfbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pamfbo {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double expected_improvement(double mean, double sd, double best) {
  if (!std::isfinite(mean) || !std::isfinite(sd) || !std::isfinite(best)) {
    throw std::invalid_argument("expected_improvement: non-finite input");
  }
  if (sd < 0.0) throw std::invalid_argument("expected_improvement: negative deviation");
  if (sd == 0.0) return 0.0;
  const double improvement = (best - mean) / sd;
  const double value = sd * (improvement * normal_cdf(improvement) + normal_pdf(improvement));
  return std::max(value, 0.0);
}

double alpha2(double posterior_sd, double noise_sd) {
  if (posterior_sd < 0.0 || noise_sd < 0.0) {
    throw std::invalid_argument("alpha2: deviations must be non-negative");
  }
  if (posterior_sd == 0.0 && noise_sd == 0.0) return 0.0;
  return 1.0 - noise_sd / std::sqrt(posterior_sd * posterior_sd + noise_sd * noise_sd);
}

double alpha3(const std::vector<double>& cost_ratios, int level) {
  if (level < 1 || level > static_cast<int>(cost_ratios.size())) {
    throw std::invalid_argument("alpha3: level out of range");
  }
  const double cost = cost_ratios[level - 1];
  if (!(cost > 0.0)) throw std::invalid_argument("alpha3: cost ratios must be positive");
  return cost_ratios.back() / cost;
}

double mach_bias(double mach, int level, int num_levels, double sonic_mach) {
  if (level < 1 || level > num_levels) throw std::invalid_argument("mach_bias: level out of range");
  if (level < num_levels) return 1.0;
  if (!(mach < sonic_mach)) {
    throw std::domain_error("mach_bias: Mach number must stay below the sonic value");
  }
  return sonic_mach / (sonic_mach - mach);
}

double damage_bias(double q3, double q4, int level, int num_levels, double q3_max, double q4_max) {
  if (level < 1 || level > num_levels) {
    throw std::invalid_argument("damage_bias: level out of range");
  }
  if (level < num_levels) return 1.0;
  if (!(q3 > 0.0) || q3 > q3_max) {
    throw std::domain_error("damage_bias: cut length must lie in (0, q3_max]");
  }
  if (q4 < 0.0 || !(q4 < q4_max)) {
    throw std::domain_error("damage_bias: load must lie in [0, q4_max)");
  }
  return 0.5 * q3_max / q3 + 0.5 / (q4_max - q4);
}

MachBias::MachBias(int mach_index, double sonic_mach)
    : mach_index_(mach_index), sonic_mach_(sonic_mach) {
  if (mach_index < 0) throw std::invalid_argument("mach bias: negative coordinate index");
  if (!(sonic_mach > 0.0)) throw std::invalid_argument("mach bias: sonic Mach must be positive");
}

double MachBias::alpha4(const Eigen::VectorXd& x, int level, int num_levels) const {
  if (mach_index_ >= x.size()) throw std::invalid_argument("mach bias: coordinate out of range");
  return mach_bias(x[mach_index_], level, num_levels, sonic_mach_);
}

DamageBias::DamageBias(int q3_index, int q4_index, double q3_max, double q4_max)
    : q3_index_(q3_index), q4_index_(q4_index), q3_max_(q3_max), q4_max_(q4_max) {
  if (q3_index < 0 || q4_index < 0 || q3_index == q4_index) {
    throw std::invalid_argument("damage bias: invalid coordinate indices");
  }
  if (!(q3_max > 0.0) || !(q4_max > 0.0)) {
    throw std::invalid_argument("damage bias: parameter maxima must be positive");
  }
}

double DamageBias::alpha4(const Eigen::VectorXd& x, int level, int num_levels) const {
  if (q3_index_ >= x.size() || q4_index_ >= x.size()) {
    throw std::invalid_argument("damage bias: coordinate out of range");
  }
  return damage_bias(x[q3_index_], x[q4_index_], level, num_levels, q3_max_, q4_max_);
}

AcquisitionContext make_acquisition_context(const ObservationSet& data,
                                            const std::vector<double>& cost_ratios,
                                            double noise_variance) {
  if (static_cast<int>(cost_ratios.size()) != data.num_levels()) {
    throw std::invalid_argument("acquisition context: one cost ratio per level required");
  }
  AcquisitionContext ctx;
  ctx.cost_ratios = cost_ratios;
  ctx.noise_sd = std::sqrt(noise_variance);

  int best_level = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& obs : data.observations()) {
    if (obs.level > best_level) {
      best_level = obs.level;
      best = obs.y;
    } else if (obs.level == best_level) {
      best = std::min(best, obs.y);
    }
  }
  if (best_level == 0) {
    throw std::invalid_argument("acquisition context: dataset is empty");
  }
  ctx.best_hf_value = best;
  ctx.best_is_provisional = best_level < data.num_levels();
  return ctx;
}

double alpha1(const MfGpModel& model, const Eigen::VectorXd& x, int level) {
  return model.posterior_correlation(x, level);
}

double acquisition_from_bundle(const PosteriorBundle& bundle, const Eigen::VectorXd& x, int level,
                               const AcquisitionContext& context, const PhysicsBias& bias,
                               bool ei_only) {
  const int num_levels = static_cast<int>(bundle.mean.size());
  const double var_top = bundle.variance[num_levels - 1];
  if (var_top < bundle.resolved_tol) return 0.0;
  const double ei = expected_improvement(bundle.mean[num_levels - 1], std::sqrt(var_top),
                                         context.best_hf_value);
  if (ei_only) return ei;

  double corr;
  const double var_l = bundle.variance[level - 1];
  if (level == num_levels) {
    corr = 1.0;
  } else if (var_l < bundle.resolved_tol) {
    corr = 0.0;
  } else {
    corr = std::clamp(bundle.cross_with_top[level - 1] / std::sqrt(var_l * var_top), -1.0, 1.0);
  }
  const double a1 = std::max(corr, 0.0);
  const double a2 = alpha2(std::sqrt(var_l), context.noise_sd);
  const double a3 = alpha3(context.cost_ratios, level);
  const double a4 = bias.alpha4(x, level, num_levels);
  return ei * a1 * a2 * a3 * a4;
}

double u_pa(const MfGpModel& model, const Eigen::VectorXd& x, int level,
            const AcquisitionContext& context, const PhysicsBias& bias) {
  if (level < 1 || level > model.num_levels()) {
    throw std::invalid_argument("u_pa: level out of range");
  }
  return acquisition_from_bundle(model.posterior_bundle(x), x, level, context, bias, false);
}

}  // namespace pamfbo
