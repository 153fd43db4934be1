#pragma once

// Differentiable ops over BasicTensor. Tensors of rank >= 2 are treated as
// row-major matrices [rows x cols] where cols is the last dimension.
// Shape mismatches throw std::invalid_argument naming both shapes.

#include <cstddef>
#include <span>
#include <vector>

#include "motionlm/numeric/tensor.hpp"

namespace motionlm::numeric {

// Additive attention mask: 0 marks a visible key, -inf a hidden one.
struct AttentionMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> additive;

  static AttentionMask all_visible(std::size_t rows, std::size_t cols);
  bool visible(std::size_t r, std::size_t c) const { return additive[r * cols + c] == 0.0f; }
  void hide(std::size_t r, std::size_t c);
  void show(std::size_t r, std::size_t c) { additive[r * cols + c] = 0.0f; }
};

template <typename S> BasicTensor<S> matmul(const BasicTensor<S>& a, const BasicTensor<S>& b);
template <typename S> BasicTensor<S> add(const BasicTensor<S>& a, const BasicTensor<S>& b);
// a[rows x n] + bias[n] broadcast over rows.
template <typename S> BasicTensor<S> add_row(const BasicTensor<S>& a, const BasicTensor<S>& bias);
template <typename S> BasicTensor<S> mul(const BasicTensor<S>& a, const BasicTensor<S>& b);
template <typename S> BasicTensor<S> scale(const BasicTensor<S>& a, S factor);
template <typename S> BasicTensor<S> relu(const BasicTensor<S>& x);
template <typename S> BasicTensor<S> softmax(const BasicTensor<S>& x);  // over the last axis
template <typename S>
BasicTensor<S> layer_norm(const BasicTensor<S>& x, const BasicTensor<S>& gain,
                          const BasicTensor<S>& bias, S eps = S(1e-5));
template <typename S>
BasicTensor<S> embedding_lookup(const BasicTensor<S>& table, std::span<const int> ids);
template <typename S> BasicTensor<S> concat_rows(const std::vector<BasicTensor<S>>& parts);
template <typename S> BasicTensor<S> reshape(const BasicTensor<S>& x, Shape shape);
template <typename S>
BasicTensor<S> gather_rows(const BasicTensor<S>& x, std::span<const std::size_t> rows);
template <typename S> BasicTensor<S> sum(const BasicTensor<S>& x);

// softmax(q k^T / sqrt(d_head) + mask) v per head; q[lq x d], k,v[lk x d].
// Rows whose keys are all hidden produce zeros.
template <typename S>
BasicTensor<S> scaled_dot_attention(const BasicTensor<S>& q, const BasicTensor<S>& k,
                                    const BasicTensor<S>& v, const AttentionMask* mask,
                                    std::size_t heads);

// Mean over rows of -log softmax(logits[r])[targets[r]].
template <typename S>
BasicTensor<S> cross_entropy(const BasicTensor<S>& logits, std::span<const int> targets);

}  // namespace motionlm::numeric
