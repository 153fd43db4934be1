#pragma once

#include <span>
#include <vector>

#include "motionlm/core/types.hpp"
#include "motionlm/tokenizer/vocabulary.hpp"

namespace motionlm {

using TokenRow = std::vector<int>;

// Discrete actions for N agents over T steps plus each agent's Verlet seed.
struct TokenSequence {
  std::vector<TokenRow> tokens;  // [agent][T]
  std::vector<RawIndexPair> seeds;

  std::size_t num_agents() const { return tokens.size(); }
  std::size_t steps() const { return tokens.empty() ? 0 : tokens[0].size(); }
  // Time-major flattening: position (t, n) -> t * N + n.
  std::vector<int> flattened() const;
};

struct TokenizedTrajectory {
  TokenRow tokens;
  std::vector<Waypoint> reconstruction;  // T waypoints, agent frame
  std::vector<RawIndexPair> raw;         // raw delta indices chosen at each step
};

// Greedy per-step search over the whole vocabulary. `trajectory` holds T+1
// agent-frame waypoints starting with the t=0 position.
TokenizedTrajectory tokenize_trajectory(const MotionVocabulary& vocab,
                                        std::span<const Waypoint> trajectory, RawIndexPair seed);

// Cumulative bin-center deltas from `start`.
std::vector<Waypoint> detokenize(const MotionVocabulary& vocab, std::span<const int> tokens,
                                 const Waypoint& start, RawIndexPair seed);

// Verlet anchor from the last observed displacement, expressed in the frame
// of the most recent valid state and rescaled to the token step interval.
RawIndexPair seed_from_history(const MotionVocabulary& vocab, std::span<const AgentState> history,
                               double history_dt);

struct ScenarioTokens {
  TokenSequence sequence;
  std::vector<std::vector<Waypoint>> reconstruction;  // [agent][T], agent frame
};

// Seeds for every modeled agent (no future needed).
std::vector<RawIndexPair> scenario_seeds(const MotionVocabulary& vocab, const Scenario& scenario);

// Tokenizes every modeled agent's ground-truth future in its own t=0 frame.
ScenarioTokens tokenize_scenario(const MotionVocabulary& vocab, const Scenario& scenario);

// Tokenizes one world-frame trajectory of `agent` (a modeled-agent index).
TokenizedTrajectory tokenize_world_trajectory(const MotionVocabulary& vocab,
                                              const Scenario& scenario, std::size_t agent,
                                              std::span<const Waypoint> future_world);

}  // namespace motionlm
