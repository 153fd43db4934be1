#pragma once

// Autoregressive joint sampling over discrete motion tokens.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionlm/core/random.hpp"
#include "motionlm/model/motion_lm.hpp"

namespace motionlm {

enum class RolloutMode { marginal, joint, conditional_causal, conditional_acausal };

const char* to_string(RolloutMode mode);
RolloutMode rollout_mode_from_string(const std::string& name);

struct RolloutConfig {
  std::size_t num_rollouts = 16;
  double top_p = 0.95;
  int attention_interval = 0;  // 0: the model's trained interval; marginal mode forces k = T
  std::uint64_t seed = 0;
  RolloutMode mode = RolloutMode::joint;
  std::optional<std::size_t> query_agent;  // modeled-agent index
  std::optional<TokenRow> query_tokens;
};

// One sampled joint future.
struct JointSample {
  std::vector<TokenRow> tokens;                   // [agent][T]
  std::vector<std::vector<Waypoint>> waypoints;   // [agent][T], world frame
  std::vector<std::vector<double>> log_probs;     // [agent][T]; 0 for forced tokens
  std::size_t replica = 0;
};

struct RolloutSet {
  std::string scenario_id;
  RolloutMode mode = RolloutMode::joint;
  std::uint64_t seed = 0;
  int attention_interval = 1;
  double top_p = 0.95;
  std::optional<std::size_t> query_agent;
  std::vector<JointSample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t num_agents() const { return samples.empty() ? 0 : samples[0].tokens.size(); }
  std::size_t steps() const {
    return samples.empty() || samples[0].tokens.empty() ? 0 : samples[0].tokens[0].size();
  }
};

// Smallest probability-sorted prefix (ties by id) whose mass reaches top_p,
// renormalized and sampled. `probs` must sum to 1 within 1e-6.
int sample_nucleus(std::span<const double> probs, double top_p, Rng& rng);

// Nucleus support in sampling order, with renormalized probabilities.
struct NucleusSupport {
  std::vector<int> ids;
  std::vector<double> probs;
};
NucleusSupport nucleus_support(std::span<const double> probs, double top_p);

// Marginal or joint sampling (mode must be one of the two).
RolloutSet rollout_joint(const MotionLM& model, const Scenario& scenario,
                         const RolloutConfig& config);

// Query agent forced to config.query_tokens; targets sampled.
RolloutSet rollout_conditional(const MotionLM& model, const Scenario& scenario,
                               const RolloutConfig& config);

// Dispatches on config.mode.
RolloutSet rollout(const MotionLM& model, const Scenario& scenario, const RolloutConfig& config);

// Conditioning input from world-frame waypoints: tokens plus the maximum
// per-coordinate reconstruction error.
struct QueryTokens {
  TokenRow tokens;
  double reconstruction_error = 0.0;
};
QueryTokens query_from_waypoints(const MotionVocabulary& vocab, const Scenario& scenario,
                                 std::size_t agent, std::span<const Waypoint> future_world);

// Teacher-forced per-step log-probabilities of a sample's tokens under the
// given rollout mask settings; [agent][T].
std::vector<std::vector<double>> score_sample(const MotionLM& model, const Scenario& scenario,
                                              const JointSample& sample,
                                              const RolloutConfig& config);

// Decodes per-agent tokens into world-frame waypoints.
std::vector<std::vector<Waypoint>> decode_tokens(const MotionVocabulary& vocab,
                                                 const Scenario& scenario,
                                                 const std::vector<TokenRow>& tokens);

}  // namespace motionlm
