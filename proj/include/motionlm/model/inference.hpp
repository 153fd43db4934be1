#pragma once

// Incremental decoding with per-layer key/value caches.
//
// A DecoderSession runs one ego view of the decoder for a batch of independent
// token sequences. Positions are fed in any order compatible with the mask:
// every column a position attends to must have been computed earlier or in
// the same call.

#include <span>
#include <vector>

#include "motionlm/model/motion_lm.hpp"

namespace motionlm {

class DecoderSession {
 public:
  DecoderSession(const MotionLM& model, const numeric::Tensor& scene, std::size_t ego,
                 const DecoderMask& mask, std::size_t batch);

  std::size_t batch() const { return batch_; }
  std::size_t ego() const { return ego_; }
  bool computed(std::size_t position) const { return computed_[position]; }

  // Runs `positions` for every sequence in the batch. `input_ids` is laid out
  // [batch x positions.size()]. Returns logits [batch x positions.size() x V].
  std::vector<float> run(std::span<const std::size_t> positions, std::span<const int> input_ids);

 private:
  const MotionLM& model_;
  const DecoderMask& mask_;
  std::size_t ego_;
  std::size_t batch_;
  std::size_t width_;
  std::size_t length_;
  std::vector<bool> computed_;
  // [layer][batch][position][width]
  std::vector<std::vector<float>> self_keys_, self_values_;
  // [layer][latents][width]
  std::vector<std::vector<float>> cross_keys_, cross_values_;
  std::size_t latents_;
};

// Log-softmax of one logits row.
std::vector<double> log_softmax(std::span<const float> logits);

}  // namespace motionlm
