#include "lowreskit/training_plan.hpp"

#include <set>

#include "lowreskit/common.hpp"
#include "lowreskit/records.hpp"

namespace lowreskit {

std::string TrainingPlan::serialize() const {
  // ordered_json keeps keys in insertion order so the text form is canonical.
  nlohmann::ordered_json root;
  root["stages"] = nlohmann::ordered_json::array();
  for (const auto& stage : stages) {
    nlohmann::ordered_json s;
    s["name"] = stage.name;
    s["init_from"] = stage.init_from;
    s["datasets"] = nlohmann::ordered_json::array();
    for (const auto& d : stage.datasets) {
      nlohmann::ordered_json ds;
      ds["name"] = d.name;
      ds["path"] = d.path;
      ds["size"] = d.size;
      s["datasets"].push_back(ds);
    }
    root["stages"].push_back(s);
  }
  return root.dump(2) + "\n";
}

TrainingPlan TrainingPlan::parse(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("training plan: ") + e.what());
  }
  TrainingPlan plan;
  for (const auto& s : require<json>(root, "stages")) {
    TrainingStage stage;
    stage.name = require<std::string>(s, "name");
    stage.init_from = optional_field<std::string>(s, "init_from", "");
    for (const auto& d : require<json>(s, "datasets")) {
      stage.datasets.push_back({require<std::string>(d, "name"), optional_field<std::string>(d, "path", ""),
                                optional_field<std::size_t>(d, "size", 0)});
    }
    plan.stages.push_back(std::move(stage));
  }
  plan.validate();
  return plan;
}

void TrainingPlan::validate() const {
  std::set<std::string> seen;
  for (const auto& stage : stages) {
    if (stage.name.empty()) throw ValidationError("training stage without a name");
    if (!stage.init_from.empty() && !seen.count(stage.init_from)) {
      throw ValidationError("stage '" + stage.name + "' initializes from unknown or later stage '" +
                            stage.init_from + "'");
    }
    if (!seen.insert(stage.name).second) throw ValidationError("duplicate stage name '" + stage.name + "'");
  }
}

}  // namespace lowreskit
