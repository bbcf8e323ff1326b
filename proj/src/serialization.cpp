#include "pamfbo/serialization.hpp"

#include <stdexcept>
#include <vector>

namespace pamfbo {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("model json: expected array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

nlohmann::json model_to_json(const MfGpModel& model) {
  nlohmann::json j;
  j["dimension"] = model.dimension();
  j["num_levels"] = model.num_levels();
  j["bounds"] = {{"lower", vector_to_json(model.lower_bounds())},
                 {"upper", vector_to_json(model.upper_bounds())}};
  j["noise_variance"] = model.noise_variance();

  nlohmann::json levels = nlohmann::json::array();
  for (const auto& h : model.hyperparameters()) {
    nlohmann::json lj;
    lj["roughness"] = vector_to_json(h.roughness);
    lj["process_variance"] = h.process_variance;
    if (h.scaling) lj["scaling"] = *h.scaling;
    if (h.trend) lj["trend"] = *h.trend;
    levels.push_back(std::move(lj));
  }
  j["levels"] = std::move(levels);

  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : model.data().observations()) {
    obs.push_back({{"x", vector_to_json(o.x)}, {"level", o.level}, {"y", o.y}});
  }
  j["observations"] = std::move(obs);
  return j;
}

MfGpModel model_from_json(const nlohmann::json& j) {
  const int dimension = j.at("dimension").get<int>();
  const int num_levels = j.at("num_levels").get<int>();
  ObservationSet data(dimension, num_levels);
  for (const auto& o : j.at("observations")) {
    data.add(vector_from_json(o.at("x")), o.at("level").get<int>(), o.at("y").get<double>());
  }
  std::vector<LevelHyperparameters> hyper;
  for (const auto& lj : j.at("levels")) {
    LevelHyperparameters h;
    h.roughness = vector_from_json(lj.at("roughness"));
    h.process_variance = lj.at("process_variance").get<double>();
    if (lj.contains("scaling")) h.scaling = lj.at("scaling").get<double>();
    if (lj.contains("trend")) h.trend = lj.at("trend").get<double>();
    hyper.push_back(std::move(h));
  }
  return MfGpModel(std::move(data), std::move(hyper), j.at("noise_variance").get<double>(),
                   vector_from_json(j.at("bounds").at("lower")),
                   vector_from_json(j.at("bounds").at("upper")));
}

}  // namespace pamfbo
