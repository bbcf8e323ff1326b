#include "pamfbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "pamfbo/nelder_mead.hpp"
#include "pamfbo/random.hpp"
#include "pamfbo/sampling.hpp"

namespace pamfbo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_point(const Eigen::VectorXd& x) {
  std::string s = "(";
  for (int m = 0; m < x.size(); ++m) s += (m ? ", " : "") + format_double(x[m]);
  return s + ")";
}

}  // namespace

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Ego: return "EGO";
    case Algorithm::Mfbo: return "MFBO";
    case Algorithm::PaMfbo: return "PA-MFBO";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "EGO") return Algorithm::Ego;
  if (name == "MFBO") return Algorithm::Mfbo;
  if (name == "PA-MFBO") return Algorithm::PaMfbo;
  throw std::invalid_argument("unknown algorithm '" + name + "' (EGO, MFBO, PA-MFBO)");
}

// ---------------------------------------------------------------------------
// RunHistory
// ---------------------------------------------------------------------------

std::optional<Eigen::VectorXd> RunHistory::incumbent() const {
  const HistoryRecord* best = nullptr;
  for (const auto& rec : records) {
    if (rec.level == num_levels && (best == nullptr || rec.y < best->y)) best = &rec;
  }
  if (best == nullptr) return std::nullopt;
  return best->x;
}

double RunHistory::incumbent_value() const {
  double best = kNaN;
  for (const auto& rec : records) {
    if (rec.level == num_levels && (std::isnan(best) || rec.y < best)) best = rec.y;
  }
  return best;
}

double RunHistory::final_budget() const { return records.empty() ? 0.0 : records.back().budget; }

double RunHistory::best_at_budget(double budget) const {
  double best = kNaN;
  for (const auto& rec : records) {
    if (rec.budget <= budget) best = rec.best_hf;
  }
  return best;
}

std::vector<int> RunHistory::calls_per_level() const {
  std::vector<int> counts(num_levels, 0);
  for (const auto& rec : records) ++counts[rec.level - 1];
  return counts;
}

std::string RunHistory::to_csv() const {
  std::string out = "iteration,level";
  for (int m = 1; m <= dimension; ++m) out += ",x_" + std::to_string(m);
  out += ",y,lambda,budget,best_hf\n";
  for (const auto& rec : records) {
    out += std::to_string(rec.iteration) + "," + std::to_string(rec.level);
    for (int m = 0; m < dimension; ++m) out += "," + format_double(rec.x[m]);
    out += "," + format_double(rec.y) + "," + format_double(rec.cost) + "," +
           format_double(rec.budget) + "," + format_double(rec.best_hf) + "\n";
  }
  return out;
}

RunHistory RunHistory::from_csv(const std::string& text) {
  std::istringstream stream(text);
  std::string line;
  if (!std::getline(stream, line)) throw std::invalid_argument("history csv: empty input");

  int columns = 1;
  for (char c : line) columns += c == ',';
  const int dimension = columns - 6;
  if (dimension < 1 || line.rfind("iteration,level,x_1", 0) != 0) {
    throw std::invalid_argument("history csv: unexpected header '" + line + "'");
  }

  RunHistory history;
  history.dimension = dimension;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(cells.size()) != columns) {
      throw std::invalid_argument("history csv: malformed row '" + line + "'");
    }
    HistoryRecord rec;
    rec.iteration = std::atoi(cells[0].c_str());
    rec.level = std::atoi(cells[1].c_str());
    rec.x.resize(dimension);
    for (int m = 0; m < dimension; ++m) rec.x[m] = std::strtod(cells[2 + m].c_str(), nullptr);
    rec.y = std::strtod(cells[2 + dimension].c_str(), nullptr);
    rec.cost = std::strtod(cells[3 + dimension].c_str(), nullptr);
    rec.budget = std::strtod(cells[4 + dimension].c_str(), nullptr);
    rec.best_hf = std::strtod(cells[5 + dimension].c_str(), nullptr);
    history.num_levels = std::max(history.num_levels, rec.level);
    history.records.push_back(std::move(rec));
  }
  return history;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

std::pair<ObservationSet, BudgetState> initialize(const MultifidelityProblem& problem,
                                                  const InitPlan& plan) {
  const int L = problem.num_levels;
  if (static_cast<int>(plan.counts.size()) != L) {
    throw std::invalid_argument("initialization plan: one sample count per level required");
  }
  for (int count : plan.counts) {
    if (count < 0) throw std::invalid_argument("initialization plan: negative sample count");
  }
  if (plan.counts[0] < problem.dimension + 1) {
    throw std::invalid_argument("initialization plan: lowest level needs at least dimension+1 samples");
  }

  ObservationSet data(problem.dimension, L);
  BudgetState budget;
  for (int level = 1; level <= L; ++level) {
    const int count = plan.counts[level - 1];
    if (count == 0) continue;
    const auto design = latin_hypercube(count, problem.dimension, problem.lower, problem.upper,
                                        mix_seed(plan.seed, static_cast<std::uint64_t>(level)));
    for (const auto& x : design) {
      double y;
      try {
        y = problem.evaluate(x, level);
      } catch (const std::exception& e) {
        throw std::runtime_error("initialization failed at level " + std::to_string(level) +
                                 ", point " + format_point(x) + ": " + e.what());
      }
      data.add(x, level, y);
      budget.consumed += problem.cost_ratios[level - 1];
    }
  }
  return {std::move(data), budget};
}

// ---------------------------------------------------------------------------
// Acquisition maximization
// ---------------------------------------------------------------------------

AcquisitionSearchResult maximize_acquisition(const MfGpModel& model,
                                             const AcquisitionContext& context,
                                             const PhysicsBias& bias,
                                             const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& upper,
                                             const SearchConfig& config, std::uint64_t pool_seed,
                                             bool ei_only) {
  const int d = static_cast<int>(lower.size());
  const int L = model.num_levels();
  const int pool_size = config.pool_per_dimension * d;
  const auto pool = halton_pool(pool_size, lower, upper, pool_seed);

  struct Entry {
    AcquisitionChoice choice;
    int index;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(pool_size) * L);
  std::vector<double> top_variance(pool_size);

  for (int i = 0; i < pool_size; ++i) {
    const PosteriorBundle bundle = model.posterior_bundle(pool[i]);
    top_variance[i] = bundle.variance[L - 1];
    for (int level = 1; level <= L; ++level) {
      const double u = acquisition_from_bundle(bundle, pool[i], level, context, bias, ei_only);
      entries.push_back({{pool[i], level, u}, i});
    }
  }

  auto better = [](const Entry& a, const Entry& b) {
    if (a.choice.value != b.choice.value) return a.choice.value > b.choice.value;
    if (a.choice.level != b.choice.level) return a.choice.level > b.choice.level;
    return a.index < b.index;
  };
  std::sort(entries.begin(), entries.end(), better);

  // local refinement of the leading candidates, each at its own fidelity
  const int refine = std::min<int>(config.refine_count, static_cast<int>(entries.size()));
  NelderMeadOptions nm;
  nm.max_evals = config.refine_evals;
  nm.init_step = 0.02;
  for (int r = 0; r < refine; ++r) {
    const Entry seed = entries[r];
    if (!(seed.choice.value > 0.0)) break;
    const int level = seed.choice.level;
    auto objective = [&](const Eigen::VectorXd& x) {
      return -acquisition_from_bundle(model.posterior_bundle(x), x, level, context, bias, ei_only);
    };
    const NelderMeadResult res = nelder_mead_minimize(objective, seed.choice.x, lower, upper, nm);
    entries.push_back({{res.x, level, -res.value}, pool_size + r});
  }
  std::sort(entries.begin(), entries.end(), better);

  AcquisitionSearchResult result;
  result.ranked.reserve(entries.size());
  for (const auto& e : entries) result.ranked.push_back(e.choice);
  result.best = result.ranked.front();
  result.stalled = !(result.best.value > 0.0);

  // exploration order: top-level posterior variance, for stall fallbacks
  std::vector<int> by_variance(pool_size);
  for (int i = 0; i < pool_size; ++i) by_variance[i] = i;
  std::sort(by_variance.begin(), by_variance.end(), [&](int a, int b) {
    if (top_variance[a] != top_variance[b]) return top_variance[a] > top_variance[b];
    return a < b;
  });
  result.exploration.reserve(pool_size);
  for (int i : by_variance) {
    result.exploration.push_back({pool[i], L, top_variance[i]});
  }
  return result;
}

// ---------------------------------------------------------------------------
// The optimization loop
// ---------------------------------------------------------------------------

namespace {

bool is_duplicate(const ObservationSet& data, const Eigen::VectorXd& x, int level,
                  const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, double tol) {
  const Eigen::VectorXd range = upper - lower;
  for (const auto& obs : data.observations()) {
    if (obs.level != level) continue;
    if (((obs.x - x).cwiseQuotient(range)).cwiseAbs().maxCoeff() <= tol) return true;
  }
  return false;
}

}  // namespace

RunHistory run(const MultifidelityProblem& problem, Algorithm algorithm, const PhysicsBias& bias,
               const InitPlan& plan, const RunConfig& config) {
  const bool ei_only = algorithm == Algorithm::Ego;
  const MultifidelityProblem effective =
      ei_only && problem.num_levels > 1 ? restrict_to_highest(problem) : problem;
  const int L = effective.num_levels;

  auto [data, budget] = initialize(effective, plan);
  budget.max = config.budget_max;
  if (budget.max + 1e-9 * std::max(1.0, std::abs(budget.consumed)) < budget.consumed) {
    throw std::invalid_argument("run: budget_max below the initialization cost");
  }

  RunHistory history;
  history.dimension = effective.dimension;
  history.num_levels = L;

  double best_hf = kNaN;
  double consumed = 0.0;
  for (const auto& obs : data.observations()) {
    consumed += effective.cost_ratios[obs.level - 1];
    if (obs.level == L && (std::isnan(best_hf) || obs.y < best_hf)) best_hf = obs.y;
    history.records.push_back({0, obs.x, obs.level, obs.y, effective.cost_ratios[obs.level - 1],
                               consumed, best_hf});
  }

  FitConfig fit_config;
  fit_config.lower = effective.lower;
  fit_config.upper = effective.upper;
  fit_config.max_simplex_evals = config.search.max_simplex_evals;

  std::vector<LevelHyperparameters> warm;
  int forced_streak = 0;

  for (int iteration = 1; budget.consumed < budget.max; ++iteration) {
    fit_config.num_starts =
        warm.empty() ? config.search.initial_fit_starts : config.search.refit_starts;
    fit_config.warm_start = warm;

    std::optional<MfGpModel> model;
    try {
      model.emplace(MfGpModel::fit(data, config.noise_variance, fit_config));
    } catch (const std::exception&) {
      // one retry with heavier regularization before giving up
      FitConfig relaxed = fit_config;
      relaxed.jitter_floor = 1e-8;
      relaxed.jitter_ceil = 1e-2;
      try {
        model.emplace(MfGpModel::fit(data, config.noise_variance, relaxed));
      } catch (const std::exception& e) {
        history.aborted = true;
        history.abort_reason = std::string("surrogate fit failed: ") + e.what();
        break;
      }
    }
    warm = model->hyperparameters();

    const AcquisitionContext context =
        make_acquisition_context(data, effective.cost_ratios, config.noise_variance);
    const AcquisitionSearchResult search = maximize_acquisition(
        *model, context, bias, effective.lower, effective.upper, config.search,
        mix_seed(config.seed, static_cast<std::uint64_t>(iteration)), ei_only);

    // duplicate-aware selection with the forced-pick escape hatch
    AcquisitionChoice choice;
    bool found = false;
    bool forced = false;
    const auto& order = (search.stalled || forced_streak >= 3) ? search.exploration : search.ranked;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (is_duplicate(data, order[k].x, order[k].level, effective.lower, effective.upper,
                       config.search.duplicate_tol)) {
        continue;
      }
      choice = order[k];
      found = true;
      forced = k > 0;
      break;
    }
    if (!found) {
      history.aborted = true;
      history.abort_reason = "no distinct candidate remained in the acquisition pool";
      break;
    }
    if (search.stalled || forced_streak >= 3) {
      forced_streak = 0;
    } else {
      forced_streak = forced ? forced_streak + 1 : 0;
    }

    double y;
    try {
      y = effective.evaluate(choice.x, choice.level);
    } catch (const std::exception& e) {
      history.aborted = true;
      history.abort_reason = std::string("objective evaluation failed at ") +
                             format_point(choice.x) + ": " + e.what();
      break;
    }
    data.add(choice.x, choice.level, y);
    const double cost = effective.cost_ratios[choice.level - 1];
    budget.consumed += cost;
    if (choice.level == L && (std::isnan(best_hf) || y < best_hf)) best_hf = y;
    history.records.push_back({iteration, choice.x, choice.level, y, cost, budget.consumed,
                               best_hf});
  }
  return history;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

RunMetrics metrics(const RunHistory& history,
                   const std::optional<Eigen::VectorXd>& ground_truth) {
  if (history.records.empty()) throw std::invalid_argument("metrics: empty history");
  RunMetrics m;
  m.best_trace.reserve(history.records.size());
  for (const auto& rec : history.records) {
    m.best_trace.emplace_back(rec.budget, rec.best_hf);
  }
  m.calls_per_level = history.calls_per_level();
  m.best_value = history.incumbent_value();
  m.incumbent = history.incumbent();
  if (ground_truth && m.incumbent) {
    std::vector<double> errors(ground_truth->size());
    for (int i = 0; i < ground_truth->size(); ++i) {
      const double truth = (*ground_truth)[i];
      const double guess = (*m.incumbent)[i];
      if (truth == 0.0) {
        errors[i] = guess == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      } else {
        errors[i] = std::abs(truth - guess) / truth * 100.0;
      }
    }
    m.relative_errors_pct = std::move(errors);
  }
  return m;
}

double RunMetrics::best_at(double budget) const {
  double best = kNaN;
  for (const auto& [b, value] : best_trace) {
    if (b <= budget) best = value;
  }
  return best;
}

double RunMetrics::first_budget_reaching(double threshold) const {
  for (const auto& [b, value] : best_trace) {
    if (!std::isnan(value) && value <= threshold) return b;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace pamfbo
