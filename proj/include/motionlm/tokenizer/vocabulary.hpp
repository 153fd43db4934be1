#pragma once

#include <optional>
#include <stdexcept>

namespace motionlm {

// Uniform (dx, dy) delta grid wrapped by a Verlet step: a token encodes the
// per-coordinate offset of the raw delta index from the previous step's, so
// the zero-offset token repeats the previous delta.
//
// Token layout is x-major: id = (ox + h) * verlet_bins + (oy + h) with
// h = (verlet_bins - 1) / 2.
struct MotionVocabulary {
  double step_hz = 2.0;
  double delta_min = -18.0;  // meters per step
  double delta_max = 18.0;
  int raw_bins = 128;
  int verlet_bins = 13;

  int vocab_size() const { return verlet_bins * verlet_bins; }
  int half_window() const { return (verlet_bins - 1) / 2; }
  double bin_width() const { return (delta_max - delta_min) / raw_bins; }
  double step_seconds() const { return 1.0 / step_hz; }
  int zero_token() const { return half_window() * verlet_bins + half_window(); }

  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;

  friend bool operator==(const MotionVocabulary&, const MotionVocabulary&) = default;
};

struct RawIndexPair {
  int ix = 0;
  int iy = 0;

  friend bool operator==(const RawIndexPair&, const RawIndexPair&) = default;
};

struct TokenOffset {
  int ox = 0;
  int oy = 0;
};

double bin_center(const MotionVocabulary& vocab, int index);
int quantize_delta(const MotionVocabulary& vocab, double delta);

TokenOffset token_offset(const MotionVocabulary& vocab, int token);
int token_from_offset(const MotionVocabulary& vocab, TokenOffset offset);

// std::nullopt signals an offset outside the Verlet window.
std::optional<int> verlet_encode(const MotionVocabulary& vocab, RawIndexPair prev,
                                 RawIndexPair cur);
RawIndexPair verlet_decode(const MotionVocabulary& vocab, RawIndexPair prev, int token);

}  // namespace motionlm
