#pragma once

// Encoder-decoder network over discrete motion tokens.
//
// The scene encoder runs once per ego agent: every input element (agent
// history states and road points) is expressed in that agent's t=0 frame,
// projected to the hidden width, and summarized by learned latent queries.
// The decoder runs once per ego view over the flattened N*T token sequence:
// masked self-attention, cross-attention to the ego's scene embedding, then a
// feed-forward block (pre-norm residual layers). Agent n's logits are read
// from ego view n.

#include <span>
#include <vector>

#include "motionlm/core/types.hpp"
#include "motionlm/model/config.hpp"
#include "motionlm/model/mask.hpp"
#include "motionlm/numeric/ops.hpp"
#include "motionlm/numeric/optim.hpp"
#include "motionlm/tokenizer/tokenizer.hpp"

namespace motionlm {

// Per-element encoder features for one ego view.
struct SceneInputs {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<double> features;  // [rows x width]
  std::vector<bool> valid;       // invalid rows are masked keys
};

// Feature width for N modeled agents.
std::size_t scene_feature_width(int num_agents);
SceneInputs build_scene_inputs(const ModelConfig& config, const Scenario& scenario,
                               std::size_t ego);

// Decoder inputs in flattened order: position (t, n) carries agent n's token
// from step t - 1, or the start token at t = 1.
std::vector<int> decoder_input_ids(const TokenSequence& tokens, int start_token);

template <typename S>
struct Linear {
  numeric::BasicTensor<S> weight;  // [in x out]
  numeric::BasicTensor<S> bias;    // [out]
  numeric::BasicTensor<S> operator()(const numeric::BasicTensor<S>& x) const;
};

template <typename S>
struct LayerNormParams {
  numeric::BasicTensor<S> gain;
  numeric::BasicTensor<S> bias;
  numeric::BasicTensor<S> operator()(const numeric::BasicTensor<S>& x) const;
};

template <typename S>
struct AttentionParams {
  Linear<S> query, key, value, output;
  std::size_t heads = 1;
  numeric::BasicTensor<S> operator()(const numeric::BasicTensor<S>& x,
                                     const numeric::BasicTensor<S>& memory,
                                     const numeric::AttentionMask* mask) const;
};

template <typename S>
struct FeedForwardParams {
  Linear<S> in, out;
  numeric::BasicTensor<S> operator()(const numeric::BasicTensor<S>& x) const;
};

template <typename S>
struct EncoderLayer {
  LayerNormParams<S> norm_query, norm_memory, norm_ff;
  AttentionParams<S> attention;
  FeedForwardParams<S> ff;
};

template <typename S>
struct DecoderLayer {
  LayerNormParams<S> norm_self, norm_cross, norm_ff;
  AttentionParams<S> self_attention, cross_attention;
  FeedForwardParams<S> ff;
};

template <typename S>
class BasicMotionLM {
 public:
  using Tensor = numeric::BasicTensor<S>;

  explicit BasicMotionLM(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  numeric::ParameterList<S>& parameters() { return params_; }
  const numeric::ParameterList<S>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  // Scene embedding [latent_queries x encoder.hidden] for one ego view.
  Tensor encode_scene(const SceneInputs& inputs) const;
  std::vector<Tensor> encode_scenario(const Scenario& scenario) const;

  // Logits [N*T x V] of one ego view for all flattened positions.
  Tensor decode_view(const Tensor& scene, std::span<const int> input_ids, std::size_t ego,
                     const DecoderMask& mask) const;

  // Row p holds agent n(p)'s logits taken from ego view n(p).
  Tensor teacher_forced_logits(std::span<const Tensor> scenes, std::span<const int> input_ids,
                               const DecoderMask& mask) const;

  // Mean token cross-entropy of one scenario under teacher forcing.
  Tensor sequence_loss(std::span<const Tensor> scenes, const TokenSequence& targets,
                       const DecoderMask& mask) const;

  // Parameter copy from a model of another precision with the same config.
  template <typename T>
  void copy_parameters_from(const BasicMotionLM<T>& other);

  // Read access for the inference engine.
  const Linear<S>& input_projection() const { return input_in_; }
  const Linear<S>& input_projection_out() const { return input_out_; }
  const Tensor& latents() const { return latents_; }
  const std::vector<EncoderLayer<S>>& encoder_layers() const { return encoder_; }
  const LayerNormParams<S>& encoder_norm() const { return encoder_norm_; }
  const Tensor& value_embedding() const { return value_embedding_; }
  const Tensor& time_embedding() const { return time_embedding_; }
  const Tensor& agent_embedding() const { return agent_embedding_; }
  const std::vector<DecoderLayer<S>>& decoder_layers() const { return decoder_; }
  const LayerNormParams<S>& decoder_norm() const { return decoder_norm_; }
  const Linear<S>& logits_head() const { return head_; }

 private:
  ModelConfig config_;
  numeric::ParameterList<S> params_;
  Linear<S> input_in_, input_out_;
  Tensor latents_;
  std::vector<EncoderLayer<S>> encoder_;
  LayerNormParams<S> encoder_norm_;
  Tensor value_embedding_, time_embedding_, agent_embedding_;
  std::vector<DecoderLayer<S>> decoder_;
  LayerNormParams<S> decoder_norm_;
  Linear<S> head_;
};

using MotionLM = BasicMotionLM<float>;

// Relative agent identity used by both encoder features and decoder embeddings.
inline std::size_t relative_agent(std::size_t agent, std::size_t ego, std::size_t num_agents) {
  return (agent + num_agents - ego) % num_agents;
}

}  // namespace motionlm
