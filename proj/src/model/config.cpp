#include "motionlm/model/config.hpp"

#include <stdexcept>

namespace motionlm {

using nlohmann::json;

ModelConfig ModelConfig::paper_scale() {
  ModelConfig c;
  c.encoder = {4, 256, 1024, 4, 92};
  c.decoder = {4, 256, 1024, 4};
  return c;
}

void ModelConfig::validate() const {
  vocab.validate();
  auto positive = [](int v, const char* what) {
    if (v < 1) throw std::invalid_argument(std::string("model config: ") + what + " must be >= 1");
  };
  positive(encoder.layers, "encoder.layers");
  positive(encoder.hidden, "encoder.hidden");
  positive(encoder.ffn, "encoder.ffn");
  positive(encoder.heads, "encoder.heads");
  positive(encoder.latent_queries, "encoder.latent_queries");
  positive(decoder.layers, "decoder.layers");
  positive(decoder.hidden, "decoder.hidden");
  positive(decoder.ffn, "decoder.ffn");
  positive(decoder.heads, "decoder.heads");
  positive(num_agents, "num_agents");
  positive(steps, "steps");
  positive(attention_interval, "attention_interval");
  if (encoder.hidden % encoder.heads != 0)
    throw std::invalid_argument("model config: encoder.hidden not divisible by encoder.heads");
  if (decoder.hidden % decoder.heads != 0)
    throw std::invalid_argument("model config: decoder.hidden not divisible by decoder.heads");
}

const char* to_string(TrainMask mask) {
  return mask == TrainMask::causal ? "causal" : "acausal_query";
}

TrainMask train_mask_from_string(const std::string& name) {
  if (name == "causal") return TrainMask::causal;
  if (name == "acausal_query") return TrainMask::acausal_query;
  throw std::invalid_argument("unknown train mask '" + name + "'");
}

json to_json(const MotionVocabulary& v) {
  return {{"step_hz", v.step_hz},   {"delta_min", v.delta_min},     {"delta_max", v.delta_max},
          {"raw_bins", v.raw_bins}, {"verlet_bins", v.verlet_bins}};
}

MotionVocabulary vocabulary_from_json(const json& j) {
  MotionVocabulary v;
  v.step_hz = j.value("step_hz", v.step_hz);
  v.delta_min = j.value("delta_min", v.delta_min);
  v.delta_max = j.value("delta_max", v.delta_max);
  v.raw_bins = j.value("raw_bins", v.raw_bins);
  v.verlet_bins = j.value("verlet_bins", v.verlet_bins);
  v.validate();
  return v;
}

json to_json(const ModelConfig& c) {
  return {{"encoder",
           {{"layers", c.encoder.layers},
            {"hidden", c.encoder.hidden},
            {"ffn", c.encoder.ffn},
            {"heads", c.encoder.heads},
            {"latent_queries", c.encoder.latent_queries}}},
          {"decoder",
           {{"layers", c.decoder.layers},
            {"hidden", c.decoder.hidden},
            {"ffn", c.decoder.ffn},
            {"heads", c.decoder.heads}}},
          {"vocab", to_json(c.vocab)},
          {"num_agents", c.num_agents},
          {"steps", c.steps},
          {"attention_interval", c.attention_interval},
          {"train_mask", to_string(c.train_mask)},
          {"init_seed", c.init_seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    c.encoder.layers = e.value("layers", c.encoder.layers);
    c.encoder.hidden = e.value("hidden", c.encoder.hidden);
    c.encoder.ffn = e.value("ffn", c.encoder.ffn);
    c.encoder.heads = e.value("heads", c.encoder.heads);
    c.encoder.latent_queries = e.value("latent_queries", c.encoder.latent_queries);
  }
  if (j.contains("decoder")) {
    const auto& d = j.at("decoder");
    c.decoder.layers = d.value("layers", c.decoder.layers);
    c.decoder.hidden = d.value("hidden", c.decoder.hidden);
    c.decoder.ffn = d.value("ffn", c.decoder.ffn);
    c.decoder.heads = d.value("heads", c.decoder.heads);
  }
  if (j.contains("vocab")) c.vocab = vocabulary_from_json(j.at("vocab"));
  c.num_agents = j.value("num_agents", c.num_agents);
  c.steps = j.value("steps", c.steps);
  c.attention_interval = j.value("attention_interval", c.attention_interval);
  c.train_mask = train_mask_from_string(j.value("train_mask", std::string("causal")));
  c.init_seed = j.value("init_seed", c.init_seed);
  c.validate();
  return c;
}

}  // namespace motionlm
