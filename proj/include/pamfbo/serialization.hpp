#pragma once

#include <json.hpp>

#include "pamfbo/mfgp.hpp"

namespace pamfbo {

// Structured-text form of a fitted model: dimension, levels, bounds,
// per-level hyperparameters, noise variance, and the observation list.
// Reloading reproduces predictions up to re-factorization error.
nlohmann::json model_to_json(const MfGpModel& model);
MfGpModel model_from_json(const nlohmann::json& j);

}  // namespace pamfbo
