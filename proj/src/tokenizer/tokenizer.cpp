#include "motionlm/tokenizer/tokenizer.hpp"

#include <limits>
#include <stdexcept>

#include "motionlm/core/frames.hpp"

namespace motionlm {

std::vector<int> TokenSequence::flattened() const {
  const std::size_t n = num_agents(), t_len = steps();
  std::vector<int> flat(n * t_len);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t a = 0; a < n; ++a) flat[t * n + a] = tokens[a][t];
  return flat;
}

TokenizedTrajectory tokenize_trajectory(const MotionVocabulary& vocab,
                                        std::span<const Waypoint> trajectory, RawIndexPair seed) {
  if (trajectory.empty()) throw std::invalid_argument("tokenize_trajectory: empty trajectory");
  TokenizedTrajectory out;
  RawIndexPair prev = seed;
  Waypoint pos = trajectory[0];
  const int vocab_size = vocab.vocab_size();
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    const Waypoint& target = trajectory[t];
    int best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    RawIndexPair best_raw{};
    Waypoint best_pos{};
    for (int id = 0; id < vocab_size; ++id) {
      const RawIndexPair raw = verlet_decode(vocab, prev, id);
      const Waypoint cand{pos.x + bin_center(vocab, raw.ix), pos.y + bin_center(vocab, raw.iy)};
      const double dx = cand.x - target.x, dy = cand.y - target.y;
      const double err = dx * dx + dy * dy;
      if (err < best_err) {
        best_err = err;
        best = id;
        best_raw = raw;
        best_pos = cand;
      }
    }
    out.tokens.push_back(best);
    out.raw.push_back(best_raw);
    out.reconstruction.push_back(best_pos);
    prev = best_raw;
    pos = best_pos;
  }
  return out;
}

std::vector<Waypoint> detokenize(const MotionVocabulary& vocab, std::span<const int> tokens,
                                 const Waypoint& start, RawIndexPair seed) {
  std::vector<Waypoint> out;
  out.reserve(tokens.size());
  RawIndexPair prev = seed;
  Waypoint pos = start;
  for (int token : tokens) {
    prev = verlet_decode(vocab, prev, token);
    pos = {pos.x + bin_center(vocab, prev.ix), pos.y + bin_center(vocab, prev.iy)};
    out.push_back(pos);
  }
  return out;
}

RawIndexPair seed_from_history(const MotionVocabulary& vocab, std::span<const AgentState> history,
                               double history_dt) {
  const AgentState* last = nullptr;
  const AgentState* before = nullptr;
  std::size_t gap = 0;
  for (std::size_t i = history.size(); i-- > 0;) {
    if (!history[i].valid) continue;
    if (!last) {
      last = &history[i];
      gap = i;
    } else {
      before = &history[i];
      gap -= i;
      break;
    }
  }
  const int zero = quantize_delta(vocab, 0.0);
  if (!last || !before) return {zero, zero};
  const AgentFrame frame = AgentFrame::of(*last);
  const Waypoint d = rotate_into(
      {last->position.x - before->position.x, last->position.y - before->position.y}, frame);
  const double rescale = vocab.step_seconds() / (history_dt * static_cast<double>(gap));
  return {quantize_delta(vocab, d.x * rescale), quantize_delta(vocab, d.y * rescale)};
}

std::vector<RawIndexPair> scenario_seeds(const MotionVocabulary& vocab, const Scenario& scenario) {
  std::vector<RawIndexPair> seeds;
  for (int a : scenario.modeled_agents)
    seeds.push_back(seed_from_history(vocab, scenario.history.at(a), scenario.history_dt));
  return seeds;
}

TokenizedTrajectory tokenize_world_trajectory(const MotionVocabulary& vocab,
                                              const Scenario& scenario, std::size_t agent,
                                              std::span<const Waypoint> future_world) {
  const AgentState& now = scenario.current_state(agent);
  const AgentFrame frame = AgentFrame::of(now);
  std::vector<Waypoint> traj{{0.0, 0.0}};
  for (const auto& p : future_world) traj.push_back(to_agent_frame(p, frame));
  const RawIndexPair seed =
      seed_from_history(vocab, scenario.history.at(scenario.modeled_agents.at(agent)),
                        scenario.history_dt);
  return tokenize_trajectory(vocab, traj, seed);
}

ScenarioTokens tokenize_scenario(const MotionVocabulary& vocab, const Scenario& scenario) {
  if (!scenario.has_future())
    throw std::invalid_argument("scenario '" + scenario.id + "' has no ground-truth future");
  ScenarioTokens out;
  out.sequence.seeds = scenario_seeds(vocab, scenario);
  for (std::size_t a = 0; a < scenario.num_modeled(); ++a) {
    auto tok = tokenize_world_trajectory(vocab, scenario, a, scenario.future[a]);
    out.sequence.tokens.push_back(std::move(tok.tokens));
    out.reconstruction.push_back(std::move(tok.reconstruction));
  }
  return out;
}

}  // namespace motionlm
