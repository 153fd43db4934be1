#pragma once

// Versioned experiment configuration (JSON) with `key.path=value` overrides.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "motionlm/aggregate/aggregate.hpp"
#include "motionlm/harness/generator.hpp"
#include "motionlm/metrics/metrics.hpp"
#include "motionlm/model/config.hpp"
#include "motionlm/model/trainer.hpp"

namespace motionlm {

inline constexpr int kExperimentSchemaVersion = 1;

struct RolloutSettings {
  std::size_t num_rollouts = 64;
  double top_p = 0.95;
  std::uint64_t seed = 7;
};

struct GridConfig {
  std::vector<int> attention_intervals = {1, 2, 4, 8, 16};
  std::vector<std::size_t> rollout_counts = {1, 2, 4, 8, 16, 32, 64};
};

struct ConditionalSettings {
  std::size_t query_agent = 0;
  std::size_t num_rollouts = 64;
  std::size_t behavior_rollouts = 256;
  double stop_onset = 2.0;  // s, forced stop of the trailing agent
  double stop_decel = 4.0;  // m/s^2
};

// The acausal variant either starts from the trained causal replica with the
// same interval and index, or from scratch.
struct AcausalSettings {
  bool init_from_causal = true;
  std::int64_t steps = 0;  // 0: train.steps
};

struct ExperimentConfig {
  int schema_version = kExperimentSchemaVersion;
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";
  GeneratorConfig train_data;
  GeneratorConfig eval_data;
  ModelConfig model;
  TrainConfig train;
  std::size_t replicas = 2;
  RolloutSettings rollout;
  AggregateConfig aggregate;
  EvalConfig metrics;
  GridConfig grid;
  ConditionalSettings conditional;
  AcausalSettings acausal;

  // Desk-scale defaults.
  static ExperimentConfig defaults();
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

// Digest of the canonical JSON rendering, excluding output_dir.
std::string config_digest(const ExperimentConfig& config);

// Applies "a.b.c=value"; the value is parsed as JSON when possible and taken
// as a string otherwise. Unknown paths are rejected.
void apply_override(nlohmann::json& document, const std::string& assignment);

// Reads a config file (missing keys take defaults) and applies overrides.
ExperimentConfig load_experiment_config(const std::string& path,
                                        const std::vector<std::string>& overrides = {});

}  // namespace motionlm
