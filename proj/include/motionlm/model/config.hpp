#pragma once

#include <string>

#include "json.hpp"
#include "motionlm/tokenizer/vocabulary.hpp"

namespace motionlm {

struct EncoderConfig {
  int layers = 2;  // first layer cross-attends latents to inputs, the rest self-attend
  int hidden = 64;
  int ffn = 128;
  int heads = 2;
  int latent_queries = 16;
};

struct DecoderConfig {
  int layers = 2;
  int hidden = 64;
  int ffn = 128;
  int heads = 2;
};

// How the training mask exposes agents to each other.
enum class TrainMask {
  causal,          // staircase with interval k
  acausal_query,   // one random query agent per example is fully visible to the others
};

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
  MotionVocabulary vocab;
  int num_agents = 2;          // N
  int steps = 16;              // T
  int attention_interval = 1;  // k; k >= T gives marginal (non-interactive) decoding
  TrainMask train_mask = TrainMask::causal;
  std::uint64_t init_seed = 1;

  // Layer sizes used in the published model.
  static ModelConfig paper_scale();
  void validate() const;
  int start_token() const { return vocab.vocab_size(); }
  int sequence_length() const { return num_agents * steps; }
};

nlohmann::json to_json(const MotionVocabulary& vocab);
MotionVocabulary vocabulary_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

const char* to_string(TrainMask mask);
TrainMask train_mask_from_string(const std::string& name);

}  // namespace motionlm
