#include "motionlm/model/motion_lm.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "motionlm/core/frames.hpp"
#include "motionlm/core/random.hpp"

namespace motionlm {

using numeric::BasicTensor;

namespace {

constexpr double kPositionScale = 20.0;
constexpr double kVelocityScale = 10.0;
constexpr double kExtentScale = 5.0;
constexpr std::size_t kBaseFeatures = 11;

template <typename S>
BasicTensor<S> uniform_param(Rng& rng, numeric::Shape shape, double bound) {
  std::vector<S> values(numeric::shape_size(shape));
  for (auto& v : values) v = static_cast<S>(rng.uniform(-bound, bound));
  return BasicTensor<S>::from(std::move(shape), std::move(values), true);
}

template <typename S>
BasicTensor<S> constant_param(numeric::Shape shape, double value) {
  std::vector<S> values(numeric::shape_size(shape), static_cast<S>(value));
  return BasicTensor<S>::from(std::move(shape), std::move(values), true);
}

}  // namespace

std::size_t scene_feature_width(int num_agents) {
  return kBaseFeatures + static_cast<std::size_t>(num_agents) + 3 + 2;
}

SceneInputs build_scene_inputs(const ModelConfig& config, const Scenario& scenario,
                               std::size_t ego) {
  if (static_cast<int>(scenario.num_modeled()) != config.num_agents)
    throw std::invalid_argument("scenario '" + scenario.id + "' models " +
                                std::to_string(scenario.num_modeled()) +
                                " agents, model expects " + std::to_string(config.num_agents));
  const AgentFrame frame = AgentFrame::of(scenario.current_state(ego));
  const std::size_t n_agents = static_cast<std::size_t>(config.num_agents);
  SceneInputs in;
  in.width = scene_feature_width(config.num_agents);
  auto new_row = [&in]() -> double* {
    in.features.resize(in.features.size() + in.width, 0.0);
    ++in.rows;
    return in.features.data() + (in.rows - 1) * in.width;
  };

  std::map<int, std::size_t> modeled_index;
  for (std::size_t m = 0; m < scenario.num_modeled(); ++m)
    modeled_index[scenario.modeled_agents[m]] = m;

  for (std::size_t a = 0; a < scenario.history.size(); ++a) {
    const auto& track = scenario.history[a];
    for (std::size_t h = 0; h < track.size(); ++h) {
      const AgentState& st = track[h];
      double* f = new_row();
      in.valid.push_back(st.valid);
      if (!st.valid) continue;
      const Waypoint p = to_agent_frame(st.position, frame);
      const Waypoint v = rotate_into({st.vx, st.vy}, frame);
      const double heading = st.heading - frame.rotation;
      f[0] = p.x / kPositionScale;
      f[1] = p.y / kPositionScale;
      f[2] = std::cos(heading);
      f[3] = std::sin(heading);
      f[4] = v.x / kVelocityScale;
      f[5] = v.y / kVelocityScale;
      f[6] = st.length / kExtentScale;
      f[7] = st.width / kExtentScale;
      f[8] = -static_cast<double>(track.size() - 1 - h) * scenario.history_dt;
      f[9] = 1.0;
      auto it = modeled_index.find(static_cast<int>(a));
      if (it != modeled_index.end())
        f[kBaseFeatures + relative_agent(it->second, ego, n_agents)] = 1.0;
      f[kBaseFeatures + n_agents + static_cast<std::size_t>(scenario.agent_types[a])] = 1.0;
    }
  }
  for (const auto& line : scenario.roadgraph) {
    for (std::size_t i = 0; i < line.points.size(); ++i) {
      double* f = new_row();
      in.valid.push_back(true);
      const Waypoint p = to_agent_frame(line.points[i], frame);
      Waypoint dir{1.0, 0.0};
      if (line.points.size() > 1) {
        const std::size_t j = i + 1 < line.points.size() ? i + 1 : i;
        const std::size_t k = j == i ? i - 1 : i;
        const Waypoint d = rotate_into(
            {line.points[j].x - line.points[k].x, line.points[j].y - line.points[k].y}, frame);
        const double len = std::hypot(d.x, d.y);
        if (len > 0.0) dir = {d.x / len, d.y / len};
      }
      f[0] = p.x / kPositionScale;
      f[1] = p.y / kPositionScale;
      f[2] = dir.x;
      f[3] = dir.y;
      f[10] = 1.0;
      f[kBaseFeatures + n_agents + 3 + static_cast<std::size_t>(line.type)] = 1.0;
    }
  }
  bool any = false;
  for (bool v : in.valid) any = any || v;
  if (!any) throw std::invalid_argument("scenario '" + scenario.id + "' has no valid inputs");
  return in;
}

std::vector<int> decoder_input_ids(const TokenSequence& tokens, int start_token) {
  const std::size_t n = tokens.num_agents(), t_len = tokens.steps();
  std::vector<int> ids(n * t_len);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t a = 0; a < n; ++a) ids[t * n + a] = t == 0 ? start_token : tokens.tokens[a][t - 1];
  return ids;
}

template <typename S>
BasicTensor<S> Linear<S>::operator()(const BasicTensor<S>& x) const {
  return numeric::add_row(numeric::matmul(x, weight), bias);
}

template <typename S>
BasicTensor<S> LayerNormParams<S>::operator()(const BasicTensor<S>& x) const {
  return numeric::layer_norm(x, gain, bias);
}

template <typename S>
BasicTensor<S> AttentionParams<S>::operator()(const BasicTensor<S>& x,
                                              const BasicTensor<S>& memory,
                                              const numeric::AttentionMask* mask) const {
  auto q = query(x);
  auto k = key(memory);
  auto v = value(memory);
  return output(numeric::scaled_dot_attention(q, k, v, mask, heads));
}

template <typename S>
BasicTensor<S> FeedForwardParams<S>::operator()(const BasicTensor<S>& x) const {
  return out(numeric::relu(in(x)));
}

template <typename S>
BasicMotionLM<S>::BasicMotionLM(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(derive_seed(config_.init_seed, 0x6d6f64656cULL));
  auto add = [this](const std::string& name, const BasicTensor<S>& t, bool decay) {
    params_.push_back({name, t, decay});
  };
  auto linear = [&](const std::string& name, std::size_t in, std::size_t out, double gain = 1.0) {
    Linear<S> l;
    l.weight = uniform_param<S>(rng, {in, out}, gain * std::sqrt(6.0 / double(in + out)));
    l.bias = constant_param<S>({out}, 0.0);
    add(name + ".weight", l.weight, true);
    add(name + ".bias", l.bias, false);
    return l;
  };
  auto norm = [&](const std::string& name, std::size_t width) {
    LayerNormParams<S> n;
    n.gain = constant_param<S>({width}, 1.0);
    n.bias = constant_param<S>({width}, 0.0);
    add(name + ".gain", n.gain, false);
    add(name + ".bias", n.bias, false);
    return n;
  };
  auto attention = [&](const std::string& name, std::size_t width, std::size_t mem_width,
                       std::size_t heads) {
    AttentionParams<S> a;
    a.query = linear(name + ".query", width, width);
    a.key = linear(name + ".key", mem_width, width);
    a.value = linear(name + ".value", mem_width, width);
    a.output = linear(name + ".output", width, width);
    a.heads = heads;
    return a;
  };
  auto feed_forward = [&](const std::string& name, std::size_t width, std::size_t ffn) {
    FeedForwardParams<S> f;
    f.in = linear(name + ".in", width, ffn);
    f.out = linear(name + ".out", ffn, width);
    return f;
  };

  const auto eh = static_cast<std::size_t>(config_.encoder.hidden);
  const auto dh = static_cast<std::size_t>(config_.decoder.hidden);
  const std::size_t features = scene_feature_width(config_.num_agents);

  input_in_ = linear("encoder.input.in", features, eh);
  input_out_ = linear("encoder.input.out", eh, eh);
  latents_ = uniform_param<S>(rng, {std::size_t(config_.encoder.latent_queries), eh}, 1.0);
  add("encoder.latents", latents_, true);
  for (int l = 0; l < config_.encoder.layers; ++l) {
    const std::string name = "encoder.layer" + std::to_string(l);
    EncoderLayer<S> layer;
    layer.norm_query = norm(name + ".norm_query", eh);
    if (l == 0) layer.norm_memory = norm(name + ".norm_memory", eh);
    layer.attention = attention(name + ".attention", eh, eh, config_.encoder.heads);
    layer.norm_ff = norm(name + ".norm_ff", eh);
    layer.ff = feed_forward(name + ".ff", eh, config_.encoder.ffn);
    encoder_.push_back(std::move(layer));
  }
  encoder_norm_ = norm("encoder.norm", eh);

  const std::size_t vocab = static_cast<std::size_t>(config_.vocab.vocab_size());
  value_embedding_ = uniform_param<S>(rng, {vocab + 1, dh}, 1.0);
  time_embedding_ = uniform_param<S>(rng, {std::size_t(config_.steps), dh}, 1.0);
  agent_embedding_ = uniform_param<S>(rng, {std::size_t(config_.num_agents), dh}, 1.0);
  add("decoder.value_embedding", value_embedding_, true);
  add("decoder.time_embedding", time_embedding_, true);
  add("decoder.agent_embedding", agent_embedding_, true);
  for (int l = 0; l < config_.decoder.layers; ++l) {
    const std::string name = "decoder.layer" + std::to_string(l);
    DecoderLayer<S> layer;
    layer.norm_self = norm(name + ".norm_self", dh);
    layer.self_attention = attention(name + ".self_attention", dh, dh, config_.decoder.heads);
    layer.norm_cross = norm(name + ".norm_cross", dh);
    layer.cross_attention = attention(name + ".cross_attention", dh, eh, config_.decoder.heads);
    layer.norm_ff = norm(name + ".norm_ff", dh);
    layer.ff = feed_forward(name + ".ff", dh, config_.decoder.ffn);
    decoder_.push_back(std::move(layer));
  }
  decoder_norm_ = norm("decoder.norm", dh);
  head_ = linear("decoder.head", dh, vocab, 0.1);
}

template <typename S>
std::size_t BasicMotionLM<S>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

template <typename S>
BasicTensor<S> BasicMotionLM<S>::encode_scene(const SceneInputs& inputs) const {
  std::vector<S> values(inputs.features.begin(), inputs.features.end());
  const auto x = Tensor::from({inputs.rows, inputs.width}, std::move(values));
  const auto memory = input_out_(numeric::relu(input_in_(x)));
  numeric::AttentionMask mask =
      numeric::AttentionMask::all_visible(latents_.rows(), inputs.rows);
  for (std::size_t r = 0; r < latents_.rows(); ++r)
    for (std::size_t c = 0; c < inputs.rows; ++c)
      if (!inputs.valid[c]) mask.hide(r, c);
  Tensor h = latents_;
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    const auto& layer = encoder_[l];
    const auto q = layer.norm_query(h);
    if (l == 0)
      h = numeric::add(h, layer.attention(q, layer.norm_memory(memory), &mask));
    else
      h = numeric::add(h, layer.attention(q, q, nullptr));
    h = numeric::add(h, layer.ff(layer.norm_ff(h)));
  }
  return encoder_norm_(h);
}

template <typename S>
std::vector<BasicTensor<S>> BasicMotionLM<S>::encode_scenario(const Scenario& scenario) const {
  std::vector<Tensor> scenes;
  for (std::size_t e = 0; e < scenario.num_modeled(); ++e)
    scenes.push_back(encode_scene(build_scene_inputs(config_, scenario, e)));
  return scenes;
}

template <typename S>
BasicTensor<S> BasicMotionLM<S>::decode_view(const Tensor& scene, std::span<const int> input_ids,
                                             std::size_t ego, const DecoderMask& mask) const {
  const std::size_t len = input_ids.size();
  if (len != mask.size())
    throw std::invalid_argument("decode_view: " + std::to_string(len) +
                                " inputs for a mask of size " + std::to_string(mask.size()));
  std::vector<int> time_ids(len), agent_ids(len);
  for (std::size_t p = 0; p < len; ++p) {
    time_ids[p] = static_cast<int>(mask.step_of(p) - 1);
    agent_ids[p] = static_cast<int>(relative_agent(mask.agent_of(p), ego, mask.num_agents));
  }
  Tensor h = numeric::add(
      numeric::add(numeric::embedding_lookup(value_embedding_, input_ids),
                   numeric::embedding_lookup(time_embedding_, std::span<const int>(time_ids))),
      numeric::embedding_lookup(agent_embedding_, std::span<const int>(agent_ids)));
  for (const auto& layer : decoder_) {
    const auto y = layer.norm_self(h);
    h = numeric::add(h, layer.self_attention(y, y, &mask.attention));
    h = numeric::add(h, layer.cross_attention(layer.norm_cross(h), scene, nullptr));
    h = numeric::add(h, layer.ff(layer.norm_ff(h)));
  }
  return head_(decoder_norm_(h));
}

template <typename S>
BasicTensor<S> BasicMotionLM<S>::teacher_forced_logits(std::span<const Tensor> scenes,
                                                       std::span<const int> input_ids,
                                                       const DecoderMask& mask) const {
  const std::size_t n = mask.num_agents;
  if (scenes.size() != n)
    throw std::invalid_argument("teacher_forced_logits: need one scene embedding per agent");
  std::vector<Tensor> per_view;
  for (std::size_t e = 0; e < n; ++e) per_view.push_back(decode_view(scenes[e], input_ids, e, mask));
  // Interleave rows back into flattened order.
  std::vector<Tensor> rows_by_view;
  std::vector<std::size_t> order(mask.size());
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<std::size_t> rows;
    for (std::size_t t = 1; t <= mask.steps; ++t) rows.push_back(mask.position(e, t));
    rows_by_view.push_back(numeric::gather_rows(per_view[e], std::span<const std::size_t>(rows)));
  }
  const auto stacked = numeric::concat_rows(rows_by_view);  // [agent][step]
  for (std::size_t p = 0; p < mask.size(); ++p)
    order[p] = mask.agent_of(p) * mask.steps + (mask.step_of(p) - 1);
  return numeric::gather_rows(stacked, std::span<const std::size_t>(order));
}

template <typename S>
BasicTensor<S> BasicMotionLM<S>::sequence_loss(std::span<const Tensor> scenes,
                                               const TokenSequence& targets,
                                               const DecoderMask& mask) const {
  const auto inputs = decoder_input_ids(targets, config_.start_token());
  const auto logits = teacher_forced_logits(scenes, inputs, mask);
  return numeric::cross_entropy(logits, std::span<const int>(targets.flattened()));
}

template <typename S>
template <typename T>
void BasicMotionLM<S>::copy_parameters_from(const BasicMotionLM<T>& other) {
  const auto& src = other.parameters();
  if (src.size() != params_.size())
    throw std::invalid_argument("copy_parameters_from: parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (src[i].name != params_[i].name || src[i].tensor.size() != params_[i].tensor.size())
      throw std::invalid_argument("copy_parameters_from: mismatch at " + params_[i].name);
    auto dst = params_[i].tensor.mutable_data();
    auto from = src[i].tensor.data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<S>(from[j]);
  }
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNormParams<float>;
template struct LayerNormParams<double>;
template struct AttentionParams<float>;
template struct AttentionParams<double>;
template struct FeedForwardParams<float>;
template struct FeedForwardParams<double>;
template class BasicMotionLM<float>;
template class BasicMotionLM<double>;
template void BasicMotionLM<float>::copy_parameters_from<double>(const BasicMotionLM<double>&);
template void BasicMotionLM<double>::copy_parameters_from<float>(const BasicMotionLM<float>&);
template void BasicMotionLM<float>::copy_parameters_from<float>(const BasicMotionLM<float>&);

}  // namespace motionlm
