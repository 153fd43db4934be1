#include "motionlm/model/trainer.hpp"

#include <cmath>

#include "motionlm/core/random.hpp"

namespace motionlm {

using nlohmann::json;

json to_json(const TrainConfig& c) {
  return {{"steps", c.steps},         {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
          {"clip_norm", c.clip_norm}, {"seed", c.seed},
          {"log_every", c.log_every}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.seed = j.value("seed", c.seed);
  c.log_every = j.value("log_every", c.log_every);
  if (c.steps < 0 || c.batch_size == 0)
    throw std::invalid_argument("train config: steps must be >= 0 and batch_size >= 1");
  return c;
}

std::vector<TrainingExample> prepare_examples(const ModelConfig& config,
                                              const ScenarioSet& scenarios) {
  std::vector<TrainingExample> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) {
    if (!s.has_future())
      throw std::invalid_argument("scenario '" + s.id + "' has no ground-truth future");
    if (s.horizon != config.steps)
      throw std::invalid_argument("scenario '" + s.id + "' horizon " + std::to_string(s.horizon) +
                                  " differs from model steps " + std::to_string(config.steps));
    TrainingExample ex;
    ex.tokens = tokenize_scenario(config.vocab, s).sequence;
    for (std::size_t e = 0; e < s.num_modeled(); ++e)
      ex.scenes.push_back(build_scene_inputs(config, s, e));
    out.push_back(std::move(ex));
  }
  return out;
}

Trainer::Trainer(MotionLM& model, TrainConfig config, std::vector<TrainingExample> examples)
    : model_(model), config_(config), examples_(std::move(examples)) {
  if (examples_.empty()) throw std::invalid_argument("Trainer: no training examples");
  const auto& mc = model_.config();
  const auto n = static_cast<std::size_t>(mc.num_agents);
  const auto t = static_cast<std::size_t>(mc.steps);
  const auto k = static_cast<std::size_t>(mc.attention_interval);
  causal_mask_ = build_decoder_mask(n, t, k);
  if (mc.train_mask == TrainMask::acausal_query)
    for (std::size_t q = 0; q < n; ++q) acausal_masks_.push_back(build_acausal_mask(n, t, k, q));
}

std::vector<std::size_t> Trainer::batch_indices(std::int64_t step) const {
  Rng rng(derive_seed(config_.seed, static_cast<std::uint64_t>(step)));
  std::vector<std::size_t> idx(config_.batch_size);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(examples_.size()));
  return idx;
}

numeric::Tensor Trainer::example_loss(const TrainingExample& ex, Rng& rng) const {
  std::vector<numeric::Tensor> scenes;
  for (const auto& in : ex.scenes) scenes.push_back(model_.encode_scene(in));
  const DecoderMask* mask = &causal_mask_;
  if (!acausal_masks_.empty()) mask = &acausal_masks_[rng.below(acausal_masks_.size())];
  return model_.sequence_loss(scenes, ex.tokens, *mask);
}

double Trainer::evaluate_loss(std::span<const std::size_t> indices) const {
  numeric::NoGradGuard guard;
  Rng rng(derive_seed(config_.seed, 0xe7a1ULL));
  double total = 0.0;
  for (std::size_t i : indices) total += example_loss(examples_[i], rng).item();
  return total / static_cast<double>(indices.size());
}

double Trainer::step() {
  if (completed_ >= config_.steps)
    throw std::logic_error("Trainer::step: all " + std::to_string(config_.steps) +
                           " steps already completed");
  const auto idx = batch_indices(completed_);
  Rng rng(derive_seed(config_.seed ^ 0x9a5c0ffeULL, static_cast<std::uint64_t>(completed_)));
  auto& params = model_.parameters();
  numeric::zero_grads(params);
  numeric::Tensor total;
  for (std::size_t i : idx) {
    auto loss = example_loss(examples_[i], rng);
    total = total.defined() ? numeric::add(total, loss) : loss;
  }
  total = numeric::scale(total, 1.0f / static_cast<float>(idx.size()));
  const double value = static_cast<double>(total.item());
  if (!std::isfinite(value)) throw DivergenceError(completed_, value);
  numeric::backward(total);
  if (config_.clip_norm > 0.0) numeric::clip_grad_norm(params, config_.clip_norm);
  numeric::AdamWConfig opt;
  opt.lr = config_.learning_rate;
  opt.weight_decay = config_.weight_decay;
  numeric::adamw_step(params, optimizer_, opt,
                      numeric::linear_lr(completed_, config_.steps, config_.learning_rate));
  numeric::zero_grads(params);
  ++completed_;
  return value;
}

TrainingLog Trainer::run(const std::function<void(std::int64_t, double)>& on_log) {
  TrainingLog log;
  while (completed_ < config_.steps) {
    const std::int64_t s = completed_;
    const double loss = step();
    if (config_.log_every > 0 && (s % config_.log_every == 0 || completed_ == config_.steps)) {
      log.steps.push_back(s);
      log.losses.push_back(loss);
      if (on_log) on_log(s, loss);
    }
  }
  return log;
}

TrainingLog Trainer::run_steps(std::int64_t count) {
  TrainingLog log;
  for (std::int64_t i = 0; i < count && completed_ < config_.steps; ++i) {
    const std::int64_t s = completed_;
    log.steps.push_back(s);
    log.losses.push_back(step());
  }
  return log;
}

Checkpoint Trainer::checkpoint() const {
  return make_checkpoint(model_, &optimizer_,
                         {{"completed_steps", completed_}, {"train", to_json(config_)}});
}

void Trainer::resume(const Checkpoint& ck) {
  if (!ck.optimizer) throw std::invalid_argument("Trainer::resume: checkpoint has no optimizer state");
  auto& params = model_.parameters();
  if (params.size() != ck.parameters.size())
    throw std::invalid_argument("Trainer::resume: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_data();
    const auto src = ck.parameters[i].tensor.data();
    if (dst.size() != src.size() || params[i].name != ck.parameters[i].name)
      throw std::invalid_argument("Trainer::resume: tensor mismatch at " + params[i].name);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  optimizer_ = *ck.optimizer;
  completed_ = ck.metadata.value("completed_steps", optimizer_.step);
}

}  // namespace motionlm
