#include "motionlm/model/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "motionlm/numeric/kernels.hpp"

namespace motionlm {

namespace {

void linear_rows(const Linear<float>& l, const float* x, float* y, std::size_t rows) {
  const std::size_t in = l.weight.shape()[0], out = l.weight.shape()[1];
  kernels::matmul(x, l.weight.data().data(), y, rows, in, out);
  const float* b = l.bias.data().data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < out; ++c) y[r * out + c] += b[c];
}

void norm_rows(const LayerNormParams<float>& n, const float* x, float* y, std::size_t rows,
               std::size_t cols) {
  kernels::layer_norm_rows(x, n.gain.data().data(), n.bias.data().data(), y,
                           static_cast<float*>(nullptr), static_cast<float*>(nullptr), rows, cols,
                           1e-5f);
}

}  // namespace

DecoderSession::DecoderSession(const MotionLM& model, const numeric::Tensor& scene,
                               std::size_t ego, const DecoderMask& mask, std::size_t batch)
    : model_(model), mask_(mask), ego_(ego), batch_(batch) {
  const auto& cfg = model.config();
  if (mask.num_agents != static_cast<std::size_t>(cfg.num_agents) ||
      mask.steps != static_cast<std::size_t>(cfg.steps))
    throw std::invalid_argument("DecoderSession: mask does not match the model config");
  if (ego >= mask.num_agents) throw std::out_of_range("DecoderSession: ego index out of range");
  width_ = static_cast<std::size_t>(cfg.decoder.hidden);
  length_ = mask.size();
  latents_ = scene.rows();
  computed_.assign(length_, false);
  const auto& layers = model.decoder_layers();
  for (const auto& layer : layers) {
    self_keys_.emplace_back(batch_ * length_ * width_, 0.0f);
    self_values_.emplace_back(batch_ * length_ * width_, 0.0f);
    std::vector<float> k(latents_ * width_), v(latents_ * width_);
    linear_rows(layer.cross_attention.key, scene.data().data(), k.data(), latents_);
    linear_rows(layer.cross_attention.value, scene.data().data(), v.data(), latents_);
    cross_keys_.push_back(std::move(k));
    cross_values_.push_back(std::move(v));
  }
}

std::vector<float> DecoderSession::run(std::span<const std::size_t> positions,
                                       std::span<const int> input_ids) {
  const std::size_t np = positions.size();
  if (input_ids.size() != batch_ * np)
    throw std::invalid_argument("DecoderSession::run: expected " + std::to_string(batch_ * np) +
                                " input ids, got " + std::to_string(input_ids.size()));
  for (std::size_t p : positions) {
    if (p >= length_) throw std::out_of_range("DecoderSession::run: position out of range");
    if (computed_[p]) throw std::logic_error("DecoderSession::run: position computed twice");
  }
  std::vector<bool> available = computed_;
  for (std::size_t p : positions) available[p] = true;
  for (std::size_t p : positions)
    for (std::size_t q = 0; q < length_; ++q)
      if (mask_.visible(p, q) && !available[q])
        throw std::logic_error("DecoderSession::run: position " + std::to_string(p) +
                               " attends to uncomputed position " + std::to_string(q));

  const auto& cfg = model_.config();
  const std::size_t vocab_rows = model_.value_embedding().rows();
  const std::size_t rows = batch_ * np;
  const std::size_t w = width_;
  std::vector<float> h(rows * w);
  const float* value_table = model_.value_embedding().data().data();
  const float* time_table = model_.time_embedding().data().data();
  const float* agent_table = model_.agent_embedding().data().data();
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t i = 0; i < np; ++i) {
      const int id = input_ids[b * np + i];
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_rows)
        throw std::out_of_range("DecoderSession::run: token id " + std::to_string(id));
      const std::size_t p = positions[i];
      const std::size_t t = mask_.step_of(p) - 1;
      const std::size_t a = relative_agent(mask_.agent_of(p), ego_, mask_.num_agents);
      float* row = h.data() + (b * np + i) * w;
      // Same association order as the autograd path: (value + time) + agent.
      for (std::size_t c = 0; c < w; ++c)
        row[c] = (value_table[id * w + c] + time_table[t * w + c]) + agent_table[a * w + c];
    }

  std::vector<float> y(rows * w), q(rows * w), k(rows * w), v(rows * w), att(rows * w),
      o(rows * w), ff(rows * static_cast<std::size_t>(cfg.decoder.ffn));
  const std::size_t heads = static_cast<std::size_t>(cfg.decoder.heads);
  const auto& layers = model_.decoder_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    norm_rows(layer.norm_self, h.data(), y.data(), rows, w);
    linear_rows(layer.self_attention.query, y.data(), q.data(), rows);
    linear_rows(layer.self_attention.key, y.data(), k.data(), rows);
    linear_rows(layer.self_attention.value, y.data(), v.data(), rows);
    auto& kc = self_keys_[l];
    auto& vc = self_values_[l];
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t i = 0; i < np; ++i) {
        const std::size_t dst = (b * length_ + positions[i]) * w;
        std::copy_n(k.data() + (b * np + i) * w, w, kc.data() + dst);
        std::copy_n(v.data() + (b * np + i) * w, w, vc.data() + dst);
      }
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t i = 0; i < np; ++i) {
        const std::size_t r = b * np + i;
        kernels::attention(q.data() + r * w, kc.data() + b * length_ * w,
                           vc.data() + b * length_ * w,
                           mask_.attention.additive.data() + positions[i] * length_,
                           att.data() + r * w, static_cast<float*>(nullptr), 1, length_, w, heads);
      }
    linear_rows(layer.self_attention.output, att.data(), o.data(), rows);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += o[j];

    norm_rows(layer.norm_cross, h.data(), y.data(), rows, w);
    linear_rows(layer.cross_attention.query, y.data(), q.data(), rows);
    kernels::attention(q.data(), cross_keys_[l].data(), cross_values_[l].data(),
                       static_cast<const float*>(nullptr), att.data(), static_cast<float*>(nullptr),
                       rows, latents_, w, heads);
    linear_rows(layer.cross_attention.output, att.data(), o.data(), rows);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += o[j];

    norm_rows(layer.norm_ff, h.data(), y.data(), rows, w);
    linear_rows(layer.ff.in, y.data(), ff.data(), rows);
    for (float& x : ff) x = std::max(x, 0.0f);
    linear_rows(layer.ff.out, ff.data(), o.data(), rows);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += o[j];
  }
  norm_rows(model_.decoder_norm(), h.data(), y.data(), rows, w);
  const std::size_t vocab = model_.logits_head().weight.shape()[1];
  std::vector<float> logits(rows * vocab);
  linear_rows(model_.logits_head(), y.data(), logits.data(), rows);
  for (std::size_t p : positions) computed_[p] = true;
  return logits;
}

std::vector<double> log_softmax(std::span<const float> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (float x : logits) mx = std::max(mx, static_cast<double>(x));
  double total = 0.0;
  for (float x : logits) total += std::exp(static_cast<double>(x) - mx);
  const double lse = mx + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(logits[i]) - lse;
  return out;
}

}  // namespace motionlm
