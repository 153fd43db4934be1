#include "motionlm/rollout/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "motionlm/core/frames.hpp"
#include "motionlm/model/inference.hpp"

namespace motionlm {

const char* to_string(RolloutMode mode) {
  switch (mode) {
    case RolloutMode::marginal: return "marginal";
    case RolloutMode::joint: return "joint";
    case RolloutMode::conditional_causal: return "conditional_causal";
    case RolloutMode::conditional_acausal: return "conditional_acausal";
  }
  return "joint";
}

RolloutMode rollout_mode_from_string(const std::string& name) {
  for (auto m : {RolloutMode::marginal, RolloutMode::joint, RolloutMode::conditional_causal,
                 RolloutMode::conditional_acausal})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown rollout mode '" + name + "'");
}

namespace {

bool is_conditional(RolloutMode m) {
  return m == RolloutMode::conditional_causal || m == RolloutMode::conditional_acausal;
}

std::size_t effective_interval(const ModelConfig& mc, const RolloutConfig& rc) {
  if (rc.mode == RolloutMode::marginal) return static_cast<std::size_t>(mc.steps);
  if (rc.attention_interval < 0) throw std::invalid_argument("attention_interval must be >= 0");
  return static_cast<std::size_t>(rc.attention_interval > 0 ? rc.attention_interval
                                                            : mc.attention_interval);
}

DecoderMask rollout_mask(const ModelConfig& mc, const RolloutConfig& rc) {
  const auto n = static_cast<std::size_t>(mc.num_agents);
  const auto t = static_cast<std::size_t>(mc.steps);
  const std::size_t k = effective_interval(mc, rc);
  if (rc.mode == RolloutMode::conditional_acausal)
    return build_acausal_mask(n, t, k, *rc.query_agent);
  return build_decoder_mask(n, t, k);
}

void check_conditional(const ModelConfig& mc, const RolloutConfig& rc) {
  if (!rc.query_agent || !rc.query_tokens)
    throw std::invalid_argument("conditional rollout requires query_agent and query_tokens");
  if (*rc.query_agent >= static_cast<std::size_t>(mc.num_agents))
    throw std::out_of_range("query_agent " + std::to_string(*rc.query_agent) + " out of range");
  if (rc.query_tokens->size() != static_cast<std::size_t>(mc.steps))
    throw std::invalid_argument("query_tokens has length " +
                                std::to_string(rc.query_tokens->size()) + ", expected " +
                                std::to_string(mc.steps));
  for (int id : *rc.query_tokens)
    if (id < 0 || id >= mc.vocab.vocab_size())
      throw std::out_of_range("query token " + std::to_string(id) + " out of range");
}

RolloutSet run_rollouts(const MotionLM& model, const Scenario& scenario, const RolloutConfig& rc) {
  const auto& mc = model.config();
  const auto n = static_cast<std::size_t>(mc.num_agents);
  const auto steps = static_cast<std::size_t>(mc.steps);
  const std::size_t r_count = rc.num_rollouts;
  if (r_count == 0) throw std::invalid_argument("num_rollouts must be >= 1");
  if (!(rc.top_p >= 0.0 && rc.top_p <= 1.0))
    throw std::invalid_argument("top_p must lie in [0, 1]");
  if (scenario.num_modeled() != n)
    throw std::invalid_argument("scenario '" + scenario.id + "' models " +
                                std::to_string(scenario.num_modeled()) + " agents, model expects " +
                                std::to_string(n));
  const bool conditional = is_conditional(rc.mode);
  const std::size_t query = conditional ? *rc.query_agent : n;
  const bool acausal = rc.mode == RolloutMode::conditional_acausal;
  const DecoderMask mask = rollout_mask(mc, rc);
  const int start = mc.start_token();
  const std::size_t vocab = static_cast<std::size_t>(mc.vocab.vocab_size());

  numeric::NoGradGuard guard;
  const auto scenes = model.encode_scenario(scenario);
  std::vector<DecoderSession> sessions;
  std::vector<std::size_t> views;
  for (std::size_t e = 0; e < n; ++e) {
    if (e == query) continue;
    sessions.emplace_back(model, scenes[e], e, mask, r_count);
    views.push_back(e);
  }

  std::vector<std::vector<TokenRow>> tokens(r_count, std::vector<TokenRow>(n, TokenRow(steps, 0)));
  std::vector<std::vector<std::vector<double>>> logp(
      r_count, std::vector<std::vector<double>>(n, std::vector<double>(steps, 0.0)));
  if (conditional)
    for (auto& sample : tokens) sample[query] = *rc.query_tokens;
  std::vector<Rng> rngs;
  for (std::size_t r = 0; r < r_count; ++r) rngs.emplace_back(derive_seed(rc.seed, r));

  if (acausal) {
    std::vector<std::size_t> positions;
    std::vector<int> ids;
    for (std::size_t t = 1; t <= steps; ++t) positions.push_back(mask.position(query, t));
    for (std::size_t r = 0; r < r_count; ++r)
      for (std::size_t t = 1; t <= steps; ++t)
        ids.push_back(t == 1 ? start : (*rc.query_tokens)[t - 2]);
    for (auto& s : sessions) s.run(positions, ids);
  }

  for (std::size_t t = 1; t <= steps; ++t) {
    std::vector<std::size_t> positions;
    std::vector<std::size_t> agents;
    for (std::size_t a = 0; a < n; ++a) {
      if (acausal && a == query) continue;
      positions.push_back(mask.position(a, t));
      agents.push_back(a);
    }
    std::vector<int> ids;
    ids.reserve(r_count * agents.size());
    for (std::size_t r = 0; r < r_count; ++r)
      for (std::size_t a : agents) ids.push_back(t == 1 ? start : tokens[r][a][t - 2]);
    std::vector<std::vector<float>> logits;
    for (auto& s : sessions) logits.push_back(s.run(positions, ids));
    for (std::size_t r = 0; r < r_count; ++r)
      for (std::size_t v = 0; v < views.size(); ++v) {
        const std::size_t e = views[v];
        const std::size_t i = static_cast<std::size_t>(
            std::find(agents.begin(), agents.end(), e) - agents.begin());
        const std::span<const float> row(logits[v].data() + (r * agents.size() + i) * vocab, vocab);
        const auto lp = log_softmax(row);
        std::vector<double> probs(vocab);
        double total = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) total += probs[j] = std::exp(lp[j]);
        for (double& p : probs) p /= total;
        const int id = sample_nucleus(probs, rc.top_p, rngs[r]);
        tokens[r][e][t - 1] = id;
        logp[r][e][t - 1] = lp[static_cast<std::size_t>(id)];
      }
  }

  RolloutSet out;
  out.scenario_id = scenario.id;
  out.mode = rc.mode;
  out.seed = rc.seed;
  out.attention_interval = static_cast<int>(effective_interval(mc, rc));
  out.top_p = rc.top_p;
  if (conditional) out.query_agent = query;
  for (std::size_t r = 0; r < r_count; ++r) {
    JointSample s;
    s.tokens = std::move(tokens[r]);
    s.waypoints = decode_tokens(mc.vocab, scenario, s.tokens);
    s.log_probs = std::move(logp[r]);
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<std::vector<Waypoint>> decode_tokens(const MotionVocabulary& vocab,
                                                 const Scenario& scenario,
                                                 const std::vector<TokenRow>& tokens) {
  const auto seeds = scenario_seeds(vocab, scenario);
  std::vector<std::vector<Waypoint>> out;
  for (std::size_t a = 0; a < tokens.size(); ++a) {
    const auto local = detokenize(vocab, tokens[a], {0.0, 0.0}, seeds.at(a));
    out.push_back(from_agent_frame(local, AgentFrame::of(scenario.current_state(a))));
  }
  return out;
}

RolloutSet rollout_joint(const MotionLM& model, const Scenario& scenario,
                         const RolloutConfig& config) {
  if (is_conditional(config.mode))
    throw std::invalid_argument("rollout_joint: mode must be joint or marginal");
  return run_rollouts(model, scenario, config);
}

RolloutSet rollout_conditional(const MotionLM& model, const Scenario& scenario,
                               const RolloutConfig& config) {
  if (!is_conditional(config.mode))
    throw std::invalid_argument("rollout_conditional: mode must be conditional_causal or "
                                "conditional_acausal");
  check_conditional(model.config(), config);
  return run_rollouts(model, scenario, config);
}

RolloutSet rollout(const MotionLM& model, const Scenario& scenario, const RolloutConfig& config) {
  return is_conditional(config.mode) ? rollout_conditional(model, scenario, config)
                                     : rollout_joint(model, scenario, config);
}

QueryTokens query_from_waypoints(const MotionVocabulary& vocab, const Scenario& scenario,
                                 std::size_t agent, std::span<const Waypoint> future_world) {
  const auto tok = tokenize_world_trajectory(vocab, scenario, agent, future_world);
  const auto frame = AgentFrame::of(scenario.current_state(agent));
  QueryTokens out;
  out.tokens = tok.tokens;
  for (std::size_t t = 0; t < future_world.size(); ++t) {
    const Waypoint local = to_agent_frame(future_world[t], frame);
    out.reconstruction_error =
        std::max({out.reconstruction_error, std::abs(local.x - tok.reconstruction[t].x),
                  std::abs(local.y - tok.reconstruction[t].y)});
  }
  return out;
}

std::vector<std::vector<double>> score_sample(const MotionLM& model, const Scenario& scenario,
                                              const JointSample& sample,
                                              const RolloutConfig& config) {
  const auto& mc = model.config();
  if (is_conditional(config.mode)) check_conditional(mc, config);
  const DecoderMask mask = rollout_mask(mc, config);
  numeric::NoGradGuard guard;
  const auto scenes = model.encode_scenario(scenario);
  TokenSequence seq;
  seq.tokens = sample.tokens;
  const auto ids = decoder_input_ids(seq, mc.start_token());
  const auto logits = model.teacher_forced_logits(scenes, ids, mask);
  const std::size_t vocab = logits.cols();
  std::vector<std::vector<double>> out(mask.num_agents, std::vector<double>(mask.steps, 0.0));
  for (std::size_t p = 0; p < mask.size(); ++p) {
    const std::size_t a = mask.agent_of(p), t = mask.step_of(p);
    if (is_conditional(config.mode) && a == *config.query_agent) continue;
    const auto lp = log_softmax(logits.data().subspan(p * vocab, vocab));
    out[a][t - 1] = lp[static_cast<std::size_t>(sample.tokens[a][t - 1])];
  }
  return out;
}

}  // namespace motionlm
