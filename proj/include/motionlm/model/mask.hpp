#pragma once

#include <cstddef>
#include <optional>

#include "motionlm/numeric/ops.hpp"

namespace motionlm {

// Self-attention mask over the time-major flattened agent-time sequence.
// Position p = (t - 1) * N + n holds agent n's decoder input at step t
// (1-indexed); that input is the agent's token from step t - 1.
struct DecoderMask {
  std::size_t num_agents = 0;
  std::size_t steps = 0;
  numeric::AttentionMask attention;

  std::size_t position(std::size_t agent, std::size_t step) const {
    return (step - 1) * num_agents + agent;
  }
  std::size_t agent_of(std::size_t p) const { return p % num_agents; }
  std::size_t step_of(std::size_t p) const { return p / num_agents + 1; }
  bool visible(std::size_t from, std::size_t to) const { return attention.visible(from, to); }
  std::size_t size() const { return num_agents * steps; }
};

// Staircase mask: a position sees its own agent's inputs up to its step, and
// other agents' inputs up to floor((t - 1) / k) * k. Same-step cross-agent
// entries are always hidden.
DecoderMask build_decoder_mask(std::size_t num_agents, std::size_t steps,
                               std::size_t attention_interval);

// Acausal conditioning: every position of `query_agent` becomes visible to all
// other agents at every step, while the query agent's own rows see only its
// own inputs (it is forced, so nothing flows back into it).
DecoderMask build_acausal_mask(std::size_t num_agents, std::size_t steps,
                               std::size_t attention_interval, std::size_t query_agent);

}  // namespace motionlm
