#include "motionlm/tokenizer/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace motionlm {

void MotionVocabulary::validate() const {
  if (!(step_hz > 0.0)) throw std::invalid_argument("vocabulary: step_hz must be positive");
  if (!(delta_min < delta_max))
    throw std::invalid_argument("vocabulary: delta_min must be below delta_max");
  if (verlet_bins < 1 || raw_bins < verlet_bins)
    throw std::invalid_argument("vocabulary: need raw_bins >= verlet_bins >= 1");
  if (verlet_bins % 2 == 0) throw std::invalid_argument("vocabulary: verlet_bins must be odd");
}

double bin_center(const MotionVocabulary& vocab, int index) {
  if (index < 0 || index >= vocab.raw_bins)
    throw std::out_of_range("bin index " + std::to_string(index) + " outside [0, " +
                            std::to_string(vocab.raw_bins) + ")");
  return vocab.delta_min + (index + 0.5) * vocab.bin_width();
}

int quantize_delta(const MotionVocabulary& vocab, double delta) {
  const double idx = std::floor((delta - vocab.delta_min) / vocab.bin_width());
  return static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(vocab.raw_bins - 1)));
}

TokenOffset token_offset(const MotionVocabulary& vocab, int token) {
  if (token < 0 || token >= vocab.vocab_size())
    throw std::out_of_range("token " + std::to_string(token) + " outside vocabulary of " +
                            std::to_string(vocab.vocab_size()));
  const int h = vocab.half_window();
  return {token / vocab.verlet_bins - h, token % vocab.verlet_bins - h};
}

int token_from_offset(const MotionVocabulary& vocab, TokenOffset offset) {
  const int h = vocab.half_window();
  return (offset.ox + h) * vocab.verlet_bins + (offset.oy + h);
}

std::optional<int> verlet_encode(const MotionVocabulary& vocab, RawIndexPair prev,
                                 RawIndexPair cur) {
  const TokenOffset o{cur.ix - prev.ix, cur.iy - prev.iy};
  const int h = vocab.half_window();
  if (std::abs(o.ox) > h || std::abs(o.oy) > h) return std::nullopt;
  return token_from_offset(vocab, o);
}

RawIndexPair verlet_decode(const MotionVocabulary& vocab, RawIndexPair prev, int token) {
  const TokenOffset o = token_offset(vocab, token);
  return {std::clamp(prev.ix + o.ox, 0, vocab.raw_bins - 1),
          std::clamp(prev.iy + o.oy, 0, vocab.raw_bins - 1)};
}

}  // namespace motionlm
