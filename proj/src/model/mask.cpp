#include "motionlm/model/mask.hpp"

#include <stdexcept>

namespace motionlm {

DecoderMask build_decoder_mask(std::size_t num_agents, std::size_t steps,
                               std::size_t attention_interval) {
  if (num_agents == 0 || steps == 0 || attention_interval == 0)
    throw std::invalid_argument("build_decoder_mask: N, T and k must be >= 1");
  DecoderMask m;
  m.num_agents = num_agents;
  m.steps = steps;
  const std::size_t len = num_agents * steps;
  m.attention = numeric::AttentionMask::all_visible(len, len);
  for (std::size_t p = 0; p < len; ++p) {
    const std::size_t tp = m.step_of(p);
    const std::size_t cross_limit = ((tp - 1) / attention_interval) * attention_interval;
    for (std::size_t q = 0; q < len; ++q) {
      const std::size_t tq = m.step_of(q);
      const bool same = m.agent_of(p) == m.agent_of(q);
      const bool visible = same ? tq <= tp : tq <= cross_limit;
      if (!visible) m.attention.hide(p, q);
    }
  }
  return m;
}

DecoderMask build_acausal_mask(std::size_t num_agents, std::size_t steps,
                               std::size_t attention_interval, std::size_t query_agent) {
  if (query_agent >= num_agents)
    throw std::invalid_argument("build_acausal_mask: query agent out of range");
  DecoderMask m = build_decoder_mask(num_agents, steps, attention_interval);
  const std::size_t len = m.size();
  for (std::size_t p = 0; p < len; ++p)
    for (std::size_t q = 0; q < len; ++q) {
      const bool p_query = m.agent_of(p) == query_agent;
      const bool q_query = m.agent_of(q) == query_agent;
      if (!p_query && q_query) m.attention.show(p, q);
      if (p_query && !q_query) m.attention.hide(p, q);
    }
  return m;
}

}  // namespace motionlm
