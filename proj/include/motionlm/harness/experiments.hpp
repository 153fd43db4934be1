#pragma once

// Experiment orchestration: replica training, ensemble evaluation, ablation
// grids and the conditional study.
//
// Files under the output directory:
//   data/{train,eval}.jsonl, data/manifest.json
//   checkpoints/<variant>_replica<r>.json
//   logs/<variant>_replica<r>.csv
//   reports/*.json, reports/*.txt, ablation_<grid>.csv, ablation_<grid>.svg

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "motionlm/aggregate/aggregate.hpp"
#include "motionlm/harness/experiment_config.hpp"
#include "motionlm/harness/stats.hpp"
#include "motionlm/metrics/metrics.hpp"
#include "motionlm/model/checkpoint.hpp"
#include "motionlm/model/trainer.hpp"
#include "motionlm/rollout/rollout.hpp"

namespace motionlm {

// A trained model family: interval k with the causal staircase, or the
// acausal-query training mask.
struct ModelVariant {
  std::string name;
  int attention_interval = 1;
  TrainMask mask = TrainMask::causal;
};

ModelVariant causal_variant(int attention_interval);  // "k<k>"
ModelVariant acausal_variant(int attention_interval);  // "acausal"
// Parses "k<k>" or "acausal"; the acausal variant uses the config's interval.
ModelVariant variant_from_name(const std::string& name, const ExperimentConfig& config);

std::filesystem::path checkpoint_path(const ExperimentConfig& config, const ModelVariant& variant,
                                      std::size_t replica);
std::filesystem::path data_path(const ExperimentConfig& config, const std::string& split);

// Model config of one replica of a variant.
ModelConfig replica_model_config(const ExperimentConfig& config, const ModelVariant& variant,
                                 std::size_t replica);
TrainConfig replica_train_config(const ExperimentConfig& config, std::size_t replica);

// Writes data/train.jsonl, data/eval.jsonl and a manifest with the digest.
void write_datasets(const ExperimentConfig& config);
// Loads a split written by write_datasets; MissingFileError names the path.
ScenarioSet load_dataset(const ExperimentConfig& config, const std::string& split);

struct TrainingRun {
  ModelVariant variant;
  std::vector<std::string> checkpoint_paths;
  std::vector<std::string> checkpoint_digests;
  std::vector<TrainingLog> logs;
};

// Trains config.replicas independent replicas (distinct init and batch
// seeds) and saves their checkpoints and loss curves.
TrainingRun run_training(const ExperimentConfig& config, const ScenarioSet& train,
                         const ModelVariant& variant,
                         const std::function<void(std::size_t, std::int64_t, double)>& on_log = {});

struct Ensemble {
  ModelVariant variant;
  std::vector<MotionLM> models;
  std::vector<std::string> paths;
  std::vector<std::string> digests;
};

// Loads every replica checkpoint; MissingFileError names the expected path.
Ensemble load_ensemble(const ExperimentConfig& config, const ModelVariant& variant);

// Rollouts of every replica for every scene: [scene][replica]. Scene i,
// replica e samples with seed derive_seed(derive_seed(base.seed, i), e).
// `customize`, when given, edits the config per scene.
using SceneRollouts = std::vector<std::vector<RolloutSet>>;
SceneRollouts sample_scenes(const Ensemble& ensemble, const ScenarioSet& scenes,
                            const RolloutConfig& base,
                            const std::function<void(std::size_t, RolloutConfig&)>& customize = {});

// Keeps the first `count` samples of each replica, merges the replicas and
// aggregates; `agents`, when given, projects samples onto those agents first.
std::vector<JointModeSet> aggregate_scenes(const SceneRollouts& rollouts,
                                           const AggregateConfig& config,
                                           std::optional<std::size_t> count = std::nullopt,
                                           const std::vector<std::size_t>& agents = {});

RolloutSet project_agents(const RolloutSet& set, const std::vector<std::size_t>& agents);
GroundTruth project_agents(const GroundTruth& truth, const std::vector<std::size_t>& agents);
std::vector<GroundTruth> ground_truths(const ScenarioSet& scenes);

// Provenance block carried by every report.
nlohmann::json provenance(const ExperimentConfig& config, const std::vector<const Ensemble*>& models);

// Rolls out the ensemble on the eval set, aggregates and evaluates.
EvalReport evaluate_ensemble(const ExperimentConfig& config, const Ensemble& ensemble,
                             const ScenarioSet& scenes, int attention_interval = 0);
nlohmann::json run_eval(const ExperimentConfig& config, const Ensemble& ensemble,
                        const ScenarioSet& scenes, EvalReport* report = nullptr);

struct AblationResult {
  std::string grid;       // "attention" or "rollouts"
  std::string parameter;  // CSV parameter column
  std::vector<double> values;
  std::vector<EvalReport> reports;
  nlohmann::json provenance;
};

// One model per attention interval in the grid, evaluated at config.rollout.
AblationResult run_attention_ablation(const ExperimentConfig& config,
                                      const std::map<int, const Ensemble*>& models,
                                      const ScenarioSet& scenes);
// One model, evaluated at every rollout count of the grid (prefixes of one
// sampling run at the largest count).
AblationResult run_rollout_ablation(const ExperimentConfig& config, const Ensemble& ensemble,
                                    const ScenarioSet& scenes);
std::string ablation_csv(const AblationResult& result, const std::string& config_digest);
// Writes ablation_<grid>.csv and ablation_<grid>.svg; returns the CSV path.
std::filesystem::path write_ablation(const ExperimentConfig& config, const AblationResult& result);

// Future of an agent that keeps its current speed and heading, then brakes
// at `decel` from `onset` seconds until it stops; world frame.
std::vector<Waypoint> stopping_trajectory(const Scenario& scenario, std::size_t agent,
                                          double onset, double decel, double step_dt = 0.5);

struct BehaviorTest {
  std::string scenario_id;
  std::size_t lead = 0;
  std::size_t trailing = 1;
  double query_error = 0.0;  // reconstruction error of the forced stop
  // Lead travel along its initial heading at the final step.
  std::vector<double> causal_baseline, causal_conditioned;
  std::vector<double> acausal_baseline, acausal_conditioned;
  TestResult causal, acausal;
};

// Forces the trailing agent to stop and compares the lead's endpoint with and
// without the intervention: the causal model against its own joint rollouts,
// the acausal model against its own marginal rollouts. Each sample set pools
// all replicas of the ensemble.
BehaviorTest behavior_test(const Ensemble& causal, const Ensemble& acausal,
                           const Scenario& scenario, std::size_t lead, std::size_t trailing,
                           const ConditionalSettings& settings, double top_p, std::uint64_t seed);

struct ConditionalStudy {
  std::size_t query_agent = 0;
  std::vector<std::size_t> targets;
  std::size_t num_scenes = 0;
  double max_query_error = 0.0;
  EvalReport marginal, causal, acausal;  // target agents only
  std::optional<BehaviorTest> behavior;
  nlohmann::json provenance;
};

// Target metrics with the query agent forced to its tokenized ground truth.
// The marginal setting is the causal ensemble's unconditioned rollouts. The
// behavioral test runs on the first lead_follow scene whose lead cruises.
ConditionalStudy run_conditional_study(const ExperimentConfig& config, const Ensemble& causal,
                                       const Ensemble& acausal, const ScenarioSet& scenes);
nlohmann::json to_json(const ConditionalStudy& study);
std::string format_conditional(const ConditionalStudy& study);

// Writes JSON and text renderings under reports/; returns the JSON path.
std::filesystem::path write_report(const ExperimentConfig& config, const std::string& name,
                                   const nlohmann::json& report, const std::string& text);

}  // namespace motionlm
