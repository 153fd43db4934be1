#include "motionlm/harness/experiment_config.hpp"

#include <fstream>
#include <stdexcept>

#include "motionlm/numeric/digest.hpp"

namespace motionlm {

using nlohmann::json;

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.train_data.count = 1000;
  c.train_data.seed = 1;
  c.train_data.families = {ScenarioFamily::lead_follow, ScenarioFamily::intersection_cross,
                           ScenarioFamily::lane_change, ScenarioFamily::pedestrian_cross};
  c.eval_data = c.train_data;
  c.eval_data.count = 200;
  c.eval_data.seed = 2;
  return c;
}

void ExperimentConfig::validate() const {
  if (schema_version != kExperimentSchemaVersion)
    throw SchemaError("experiment config schema_version " + std::to_string(schema_version) +
                      " is not supported (expected " + std::to_string(kExperimentSchemaVersion) +
                      ")");
  train_data.validate();
  eval_data.validate();
  model.validate();
  metrics.thresholds.validate();
  if (replicas < 1) throw std::invalid_argument("experiment: replicas must be >= 1");
  if (rollout.num_rollouts < 1) throw std::invalid_argument("experiment: num_rollouts must be >= 1");
  if (grid.attention_intervals.empty() || grid.rollout_counts.empty())
    throw std::invalid_argument("experiment: ablation grids must not be empty");
  for (int k : grid.attention_intervals)
    if (k < 1) throw std::invalid_argument("experiment: attention intervals must be >= 1");
  for (std::size_t r : grid.rollout_counts)
    if (r < 1) throw std::invalid_argument("experiment: rollout counts must be >= 1");
  if (conditional.query_agent >= static_cast<std::size_t>(model.num_agents))
    throw std::invalid_argument("experiment: conditional.query_agent out of range");
  if (acausal.steps < 0) throw std::invalid_argument("experiment: acausal.steps must be >= 0");
  if (train_data.horizon != model.steps || eval_data.horizon != model.steps)
    throw std::invalid_argument("experiment: data horizon must equal model.steps");
}

json to_json(const ExperimentConfig& c) {
  return {{"schema_version", c.schema_version},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"train_data", to_json(c.train_data)},
          {"eval_data", to_json(c.eval_data)},
          {"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"replicas", c.replicas},
          {"rollout",
           {{"num_rollouts", c.rollout.num_rollouts},
            {"top_p", c.rollout.top_p},
            {"seed", c.rollout.seed}}},
          {"aggregate", to_json(c.aggregate)},
          {"metrics", to_json(c.metrics)},
          {"grid",
           {{"attention_intervals", c.grid.attention_intervals},
            {"rollout_counts", c.grid.rollout_counts}}},
          {"conditional",
           {{"query_agent", c.conditional.query_agent},
            {"num_rollouts", c.conditional.num_rollouts},
            {"behavior_rollouts", c.conditional.behavior_rollouts},
            {"stop_onset", c.conditional.stop_onset},
            {"stop_decel", c.conditional.stop_decel}}},
          {"acausal",
           {{"init_from_causal", c.acausal.init_from_causal}, {"steps", c.acausal.steps}}}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  try {
    ExperimentConfig c = ExperimentConfig::defaults();
    c.schema_version = j.value("schema_version", c.schema_version);
    if (c.schema_version != kExperimentSchemaVersion)
      throw SchemaError("experiment config schema_version " + std::to_string(c.schema_version) +
                        " is not supported (expected " +
                        std::to_string(kExperimentSchemaVersion) + ")");
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("train_data")) c.train_data = generator_config_from_json(j.at("train_data"));
    if (j.contains("eval_data")) c.eval_data = generator_config_from_json(j.at("eval_data"));
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    c.replicas = j.value("replicas", c.replicas);
    if (j.contains("rollout")) {
      const auto& r = j.at("rollout");
      c.rollout.num_rollouts = r.value("num_rollouts", c.rollout.num_rollouts);
      c.rollout.top_p = r.value("top_p", c.rollout.top_p);
      c.rollout.seed = r.value("seed", c.rollout.seed);
    }
    if (j.contains("aggregate")) c.aggregate = aggregate_config_from_json(j.at("aggregate"));
    if (j.contains("metrics")) c.metrics = eval_config_from_json(j.at("metrics"));
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      c.grid.attention_intervals = g.value("attention_intervals", c.grid.attention_intervals);
      c.grid.rollout_counts = g.value("rollout_counts", c.grid.rollout_counts);
    }
    if (j.contains("conditional")) {
      const auto& q = j.at("conditional");
      c.conditional.query_agent = q.value("query_agent", c.conditional.query_agent);
      c.conditional.num_rollouts = q.value("num_rollouts", c.conditional.num_rollouts);
      c.conditional.behavior_rollouts = q.value("behavior_rollouts", c.conditional.behavior_rollouts);
      c.conditional.stop_onset = q.value("stop_onset", c.conditional.stop_onset);
      c.conditional.stop_decel = q.value("stop_decel", c.conditional.stop_decel);
    }
    if (j.contains("acausal")) {
      const auto& a = j.at("acausal");
      c.acausal.init_from_causal = a.value("init_from_causal", c.acausal.init_from_causal);
      c.acausal.steps = a.value("steps", c.acausal.steps);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("experiment config: ") + e.what());
  }
}

std::string config_digest(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("output_dir");
  return digest_hex(j.dump());
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part))
      throw std::invalid_argument("override: unknown config key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

ExperimentConfig load_experiment_config(const std::string& path,
                                        const std::vector<std::string>& overrides) {
  json doc = to_json(ExperimentConfig::defaults());
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw MissingFileError("config file not found: " + path);
    json file;
    try {
      in >> file;
    } catch (const json::exception& e) {
      throw SchemaError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!file.is_object()) throw SchemaError("config file " + path + " must hold a JSON object");
    doc.merge_patch(file);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return experiment_config_from_json(doc);
}

}  // namespace motionlm
