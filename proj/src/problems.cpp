#include "pamfbo/problems.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace pamfbo {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

double discrepancy_rmse(const Eigen::VectorXd& reference, const Eigen::VectorXd& monitored,
                        RmseDenominator denominator) {
  if (reference.size() != monitored.size()) {
    throw std::invalid_argument("discrepancy_rmse: field size mismatch");
  }
  if (reference.size() == 0) throw std::invalid_argument("discrepancy_rmse: empty fields");

  constexpr double kFloor = 1e-9;
  std::string bad;
  int bad_count = 0;
  for (int j = 0; j < reference.size(); ++j) {
    if (std::abs(reference[j]) < kFloor) {
      if (bad_count < 8) bad += (bad.empty() ? "" : ", ") + std::to_string(j);
      ++bad_count;
    }
  }
  if (bad_count > 0) {
    throw std::invalid_argument("discrepancy_rmse: reference entries below floor at indices " +
                                bad + (bad_count > 8 ? ", ..." : ""));
  }

  double sum = 0.0;
  for (int j = 0; j < reference.size(); ++j) {
    const double dev = reference[j] - monitored[j];
    const double denom = denominator == RmseDenominator::Reference
                             ? reference[j]
                             : reference[j] * reference[j];
    sum += dev * dev / denom;
  }
  return std::sqrt(sum / static_cast<double>(reference.size()));
}

double MultifidelityProblem::evaluate(const Eigen::VectorXd& x, int level) const {
  if (level < 1 || level > num_levels) {
    throw std::invalid_argument(name + ": level " + std::to_string(level) + " outside 1.." +
                                std::to_string(num_levels));
  }
  if (x.size() != dimension) throw std::invalid_argument(name + ": point dimension mismatch");
  for (int m = 0; m < dimension; ++m) {
    const double slack = 1e-9 * (upper[m] - lower[m]);
    if (x[m] < lower[m] - slack || x[m] > upper[m] + slack) {
      throw std::domain_error(name + ": coordinate " + std::to_string(m + 1) + " out of bounds");
    }
  }
  const double y = evaluators[level - 1](x);
  if (!std::isfinite(y)) {
    throw std::runtime_error(name + ": evaluator returned a non-finite value at level " +
                             std::to_string(level));
  }
  return y;
}

nlohmann::json MultifidelityProblem::manifest() const {
  nlohmann::json j;
  j["name"] = name;
  j["dimension"] = dimension;
  j["num_levels"] = num_levels;
  j["bounds"] = {{"lower", vector_to_json(lower)}, {"upper", vector_to_json(upper)}};
  j["cost_ratios"] = cost_ratios;
  j["psi"] = psi_description;
  if (optimum_x) j["optimum_x"] = vector_to_json(*optimum_x);
  if (optimum_value) j["optimum_value"] = *optimum_value;
  if (ground_truth) j["ground_truth"] = vector_to_json(*ground_truth);
  return j;
}

// ---------------------------------------------------------------------------
// Forrester pair
// ---------------------------------------------------------------------------

namespace {

double forrester_high(double x) {
  const double a = 6.0 * x - 2.0;
  return a * a * std::sin(12.0 * x - 4.0);
}

double forrester_low(double x) { return 0.5 * forrester_high(x) + 10.0 * (x - 0.5) - 5.0; }

}  // namespace

MultifidelityProblem forrester_pair() {
  MultifidelityProblem p;
  p.name = "forrester";
  p.dimension = 1;
  p.num_levels = 2;
  p.lower = Eigen::VectorXd::Zero(1);
  p.upper = Eigen::VectorXd::Ones(1);
  p.cost_ratios = {0.125, 1.0};
  p.evaluators = {[](const Eigen::VectorXd& x) { return forrester_low(x[0]); },
                  [](const Eigen::VectorXd& x) { return forrester_high(x[0]); }};
  p.psi_extractor = [](const Eigen::VectorXd& x) { return x; };
  p.psi_description = "design coordinate itself";
  Eigen::VectorXd opt(1);
  opt << 0.757248757830611;  // located by dense grid plus local refinement
  p.optimum_x = opt;
  p.optimum_value = -6.020740055767082;
  return p;
}

// ---------------------------------------------------------------------------
// Cross-regime problem
// ---------------------------------------------------------------------------

namespace {

// Fixed analog constants. The top level has a valley inside the
// near-critical regime; the lower fidelities add discrepancies that grow
// quadratically in the regime variable, the lowest level drifting most.
constexpr double kRegimeLo = 0.6;
constexpr double kRegimeHi = 0.99;

double cross_high(double w, double M) {
  const double dip = (M - 0.88) / 0.05;
  return (w - 0.3) * (w - 0.3) + 1.0 - 0.8 * std::exp(-dip * dip) + 0.5 * (M - kRegimeLo);
}

double regime_growth(double M) {
  const double t = (M - kRegimeLo) / (kRegimeHi - kRegimeLo);
  return t * t;
}

double cross_mid(double w, double M) {
  return cross_high(w, M) + 0.45 * regime_growth(M) * (0.7 + 0.3 * std::cos(3.0 * w + 0.5)) +
         0.008 * std::cos(2.0 * w + 0.3);
}

double cross_low(double w, double M) {
  return cross_high(w, M) + 1.5 * regime_growth(M) * (0.7 + 0.3 * std::cos(3.0 * w)) +
         0.02 * std::cos(2.0 * w);
}

}  // namespace

MultifidelityProblem cross_regime_problem() {
  MultifidelityProblem p;
  p.name = "cross_regime";
  p.dimension = 2;
  p.num_levels = 3;
  p.lower = vec2(-1.0, kRegimeLo);
  p.upper = vec2(1.0, kRegimeHi);
  p.cost_ratios = {0.125, 0.2, 1.0};
  p.evaluators = {[](const Eigen::VectorXd& x) { return cross_low(x[0], x[1]); },
                  [](const Eigen::VectorXd& x) { return cross_mid(x[0], x[1]); },
                  [](const Eigen::VectorXd& x) { return cross_high(x[0], x[1]); }};
  p.psi_extractor = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd psi(1);
    psi << x[1];
    return psi;
  };
  p.psi_description = "Mach-like regime coordinate x2";
  Eigen::VectorXd opt = vec2(0.3, 0.879218559220);  // located by dense grid plus local refinement
  p.optimum_x = opt;
  p.optimum_value = 0.339804663648;
  return p;
}

// ---------------------------------------------------------------------------
// Plate identification problem
// ---------------------------------------------------------------------------

namespace plate_detail {

namespace {

// plate extent in mm and the fixed monitoring grid
constexpr double kPlateU = 102.0;
constexpr double kPlateV = 456.0;
constexpr int kGridU = 16;
constexpr int kGridV = 32;


// Two signatures of a transversal cut under load. A broad section-loss band
// across the cut row scales with cut length times load: it survives coarse
// modeling and dominates far from the damage. A narrow strain concentration
// at the cut tip scales with the load alone and widens with the cut: only a
// fine model resolves it, and it is what separates a short cut under high
// load from a long cut under moderate load.
constexpr double kBandWidth = 60.0;   // longitudinal extent of the section-loss band
constexpr double kBandWidthU = 35.0;  // lateral decay away from the cut
constexpr double kBandPerCutLoad = 0.02;
constexpr double kBumpWidthBase = 4.0;
constexpr double kBumpWidthPerCut = 0.4;
constexpr double kBumpWidthV = 10.0;
constexpr double kBumpPerLoad = 0.12;
constexpr double kBumpCutSaturation = 1.5;  // concentration dies out as the cut closes

// low-fidelity view: the same field seen through a Gaussian blur (mild on
// the band, strong on the concentration), plus a small baseline offset
constexpr double kBlurRadius = 24.0;
constexpr double kLowBaselineGain = 1.02;

double baseline(double u, double v) {
  return 1.0 + 0.1 * (v / kPlateV) + 0.05 * (u / kPlateU);
}

}  // namespace

Eigen::Index grid_size() { return static_cast<Eigen::Index>(kGridU) * kGridV; }

Eigen::VectorXd strain_field(const Eigen::VectorXd& q, int level) {
  if (q.size() != 4) throw std::invalid_argument("strain_field: expected 4 damage parameters");
  if (level < 1 || level > 2) throw std::invalid_argument("strain_field: level must be 1 or 2");
  const double q1 = q[0], q2 = q[1], q3 = q[2], q4 = q[3];

  const double wu = kBumpWidthBase + kBumpWidthPerCut * q3;
  const double wv = kBumpWidthV;
  double bump_su = wu, bump_sv = wv;
  double bump_amp = kBumpPerLoad * q4 * (q3 / (q3 + kBumpCutSaturation));
  double band_su = kBandWidthU, band_sv = kBandWidth;
  double band_amp = kBandPerCutLoad * q3 * q4;
  double gain = 1.0;
  if (level == 1) {
    // the blur of a Gaussian is again Gaussian: widened and attenuated
    const double r2 = kBlurRadius * kBlurRadius;
    bump_su = std::sqrt(wu * wu + r2);
    bump_sv = std::sqrt(wv * wv + r2);
    bump_amp *= (wu / bump_su) * (wv / bump_sv);
    band_su = std::sqrt(kBandWidthU * kBandWidthU + r2);
    band_sv = std::sqrt(kBandWidth * kBandWidth + r2);
    band_amp *= (kBandWidthU / band_su) * (kBandWidth / band_sv);
    gain = kLowBaselineGain;
  }

  Eigen::VectorXd field(grid_size());
  Eigen::Index k = 0;
  for (int j = 0; j < kGridV; ++j) {
    const double v = (j + 0.5) * kPlateV / kGridV;
    const double band_dv = (v - q2) / band_sv;
    for (int i = 0; i < kGridU; ++i) {
      const double u = (i + 0.5) * kPlateU / kGridU;
      const double band_du = (u - q1) / band_su;
      const double band = band_amp * std::exp(-0.5 * (band_du * band_du + band_dv * band_dv));
      const double du = (u - q1) / bump_su;
      const double dv = (v - q2) / bump_sv;
      field[k++] =
          gain * baseline(u, v) + band + bump_amp * std::exp(-0.5 * (du * du + dv * dv));
    }
  }
  return field;
}

}  // namespace plate_detail

MultifidelityProblem plate_identification_problem(const Eigen::VectorXd& q_true,
                                                  RmseDenominator denominator) {
  using namespace plate_detail;
  MultifidelityProblem p;
  p.name = "plate";
  p.dimension = 4;
  p.num_levels = 2;
  p.lower.resize(4);
  p.upper.resize(4);
  // q3 = 0 and q4 = q4_max are singular for the damage bias; the search box
  // stops a relative epsilon short of them
  const double eps3 = 1e-6 * 30.0;
  const double eps4 = 1e-6 * 20.0;
  p.lower << 0.0, 0.0, eps3, 0.0;
  p.upper << 102.0, 456.0, 30.0, 20.0 - eps4;

  if (q_true.size() != 4) {
    throw std::invalid_argument("plate problem: ground truth must have 4 entries");
  }
  for (int m = 0; m < 4; ++m) {
    if (q_true[m] < p.lower[m] || q_true[m] > p.upper[m]) {
      throw std::invalid_argument("plate problem: ground truth outside bounds at q" +
                                  std::to_string(m + 1));
    }
  }

  p.cost_ratios = {0.2, 1.0};
  const Eigen::VectorXd reference = plate_detail::strain_field(q_true, 2);
  p.evaluators = {[reference, denominator](const Eigen::VectorXd& q) {
                    return discrepancy_rmse(reference, plate_detail::strain_field(q, 1),
                                            denominator);
                  },
                  [reference, denominator](const Eigen::VectorXd& q) {
                    return discrepancy_rmse(reference, plate_detail::strain_field(q, 2),
                                            denominator);
                  }};
  p.psi_extractor = [](const Eigen::VectorXd& q) {
    Eigen::VectorXd psi(2);
    psi << q[2], q[3];
    return psi;
  };
  p.psi_description = "cut length q3 and load q4";
  p.ground_truth = q_true;
  p.optimum_x = q_true;
  p.optimum_value = 0.0;
  return p;
}

MultifidelityProblem restrict_to_highest(const MultifidelityProblem& problem) {
  MultifidelityProblem p = problem;
  p.name = problem.name + "_hf";
  p.num_levels = 1;
  p.evaluators = {problem.evaluators.back()};
  p.cost_ratios = {1.0};
  return p;
}

std::vector<std::string> registered_problems() { return {"forrester", "cross_regime", "plate"}; }

MultifidelityProblem make_problem(const std::string& name, const nlohmann::json& params) {
  if (name == "forrester") return forrester_pair();
  if (name == "cross_regime") return cross_regime_problem();
  if (name == "plate") {
    Eigen::VectorXd q_true(4);
    q_true << 40.0, 250.0, 10.0, 5.0;
    if (params.contains("q_true")) {
      const auto& arr = params.at("q_true");
      if (!arr.is_array() || arr.size() != 4) {
        throw std::invalid_argument("plate problem: q_true must be an array of 4 numbers");
      }
      for (int m = 0; m < 4; ++m) q_true[m] = arr[m].get<double>();
    }
    RmseDenominator denom = RmseDenominator::Reference;
    if (params.contains("rmse_denominator")) {
      const std::string mode = params.at("rmse_denominator").get<std::string>();
      if (mode == "s_ref") {
        denom = RmseDenominator::Reference;
      } else if (mode == "s_ref_squared") {
        denom = RmseDenominator::ReferenceSquared;
      } else {
        throw std::invalid_argument("plate problem: rmse_denominator must be s_ref or s_ref_squared");
      }
    }
    return plate_identification_problem(q_true, denom);
  }
  std::string known;
  for (const auto& n : registered_problems()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown problem '" + name + "' (known: " + known + ")");
}

}  // namespace pamfbo
