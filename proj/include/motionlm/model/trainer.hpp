#pragma once

// Teacher-forced maximum-likelihood training.
//
// Batches are drawn from an RNG seeded by (seed, step), so a run resumed from
// a checkpoint at step s replays exactly the batches an uninterrupted run
// would have drawn after s.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "motionlm/core/random.hpp"
#include "motionlm/model/checkpoint.hpp"
#include "motionlm/model/motion_lm.hpp"
#include "motionlm/numeric/optim.hpp"

namespace motionlm {

struct TrainConfig {
  std::int64_t steps = 5000;
  std::size_t batch_size = 32;
  double learning_rate = 0.0006;
  double weight_decay = 0.6;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::uint64_t seed = 1;
  std::int64_t log_every = 50;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Training loss became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t step, double loss)
      : std::runtime_error("loss diverged at step " + std::to_string(step) + " (" +
                           std::to_string(loss) + ")"),
        step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

// Tokens and encoder inputs of one scenario, prepared once.
struct TrainingExample {
  TokenSequence tokens;
  std::vector<SceneInputs> scenes;  // one per ego agent
};

std::vector<TrainingExample> prepare_examples(const ModelConfig& config,
                                              const ScenarioSet& scenarios);

struct TrainingLog {
  std::vector<std::int64_t> steps;
  std::vector<double> losses;
};

class Trainer {
 public:
  Trainer(MotionLM& model, TrainConfig config, std::vector<TrainingExample> examples);

  // Continues from a checkpoint carrying optimizer state and the step count.
  void resume(const Checkpoint& checkpoint);

  // Mean loss of one optimization step on the batch for `step`.
  double step();
  // Runs until config.steps, calling `on_log` every log_every steps.
  TrainingLog run(const std::function<void(std::int64_t, double)>& on_log = {});
  // Runs `count` further steps (bounded by config.steps).
  TrainingLog run_steps(std::int64_t count);

  std::int64_t completed_steps() const { return completed_; }
  const numeric::AdamWState& optimizer_state() const { return optimizer_; }
  Checkpoint checkpoint() const;

  // Batch loss with no parameter update (no tape).
  double evaluate_loss(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> batch_indices(std::int64_t step) const;

 private:
  numeric::Tensor example_loss(const TrainingExample& example, Rng& rng) const;

  MotionLM& model_;
  TrainConfig config_;
  std::vector<TrainingExample> examples_;
  numeric::AdamWState optimizer_;
  std::int64_t completed_ = 0;
  DecoderMask causal_mask_;
  std::vector<DecoderMask> acausal_masks_;
};

}  // namespace motionlm
