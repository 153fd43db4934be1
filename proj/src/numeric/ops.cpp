#include "motionlm/numeric/ops.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "motionlm/numeric/kernels.hpp"

namespace motionlm::numeric {

namespace {

template <typename S>
using NodePtr = std::shared_ptr<TensorNode<S>>;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_string(a) +
                              " and " + shape_string(b));
}

// Builds the output node; the backward closure is attached only when recording.
template <typename S>
BasicTensor<S> make_result(Shape shape, std::vector<S> value,
                           std::vector<NodePtr<S>> parents,
                           std::function<void(TensorNode<S>&)> backward_fn) {
  auto node = std::make_shared<TensorNode<S>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled())
    for (const auto& p : parents) needs = needs || p->requires_grad;
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward_fn);
  }
  return BasicTensor<S>(std::move(node));
}

template <typename S>
Shape matrix_shape(const BasicTensor<S>& t, std::size_t cols) {
  Shape s = t.shape();
  if (s.empty()) s = {1};
  s.back() = cols;
  return s;
}

}  // namespace

AttentionMask AttentionMask::all_visible(std::size_t rows, std::size_t cols) {
  AttentionMask m;
  m.rows = rows;
  m.cols = cols;
  m.additive.assign(rows * cols, 0.0f);
  return m;
}

void AttentionMask::hide(std::size_t r, std::size_t c) {
  additive[r * cols + c] = -std::numeric_limits<float>::infinity();
}

template <typename S>
BasicTensor<S> matmul(const BasicTensor<S>& a, const BasicTensor<S>& b) {
  const std::size_t m = a.rows(), k = a.cols();
  if (b.rank() != 2 || b.shape()[0] != k) shape_error("matmul", a.shape(), b.shape());
  const std::size_t n = b.cols();
  std::vector<S> out(m * n);
  kernels::matmul(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result<S>(matrix_shape(a, n), std::move(out), {a.node(), b.node()},
                        [m, k, n](TensorNode<S>& self) {
                          auto& pa = *self.parents[0];
                          auto& pb = *self.parents[1];
                          if (pa.requires_grad)
                            kernels::matmul_nt(self.grad.data(), pb.value.data(),
                                               pa.grad_buffer().data(), m, n, k, true);
                          if (pb.requires_grad)
                            kernels::matmul_tn(pa.value.data(), self.grad.data(),
                                               pb.grad_buffer().data(), k, m, n, true);
                        });
}

template <typename S>
BasicTensor<S> add(const BasicTensor<S>& a, const BasicTensor<S>& b) {
  if (a.size() != b.size() || a.cols() != b.cols()) shape_error("add", a.shape(), b.shape());
  std::vector<S> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<S>(a.shape(), std::move(out), {a.node(), b.node()},
                        [](TensorNode<S>& self) {
                          for (auto& p : self.parents) {
                            if (!p->requires_grad) continue;
                            auto& g = p->grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                        });
}

template <typename S>
BasicTensor<S> add_row(const BasicTensor<S>& a, const BasicTensor<S>& bias) {
  const std::size_t n = a.cols();
  if (bias.size() != n) shape_error("add_row", a.shape(), bias.shape());
  const std::size_t rows = a.rows();
  std::vector<S> out(a.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = a.data()[r * n + c] + bias.data()[c];
  return make_result<S>(a.shape(), std::move(out), {a.node(), bias.node()},
                        [rows, n](TensorNode<S>& self) {
                          auto& pa = *self.parents[0];
                          auto& pb = *self.parents[1];
                          if (pa.requires_grad) {
                            auto& g = pa.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                          if (pb.requires_grad) {
                            auto& g = pb.grad_buffer();
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < n; ++c) g[c] += self.grad[r * n + c];
                          }
                        });
}

template <typename S>
BasicTensor<S> mul(const BasicTensor<S>& a, const BasicTensor<S>& b) {
  if (a.size() != b.size() || a.cols() != b.cols()) shape_error("mul", a.shape(), b.shape());
  std::vector<S> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<S>(a.shape(), std::move(out), {a.node(), b.node()},
                        [](TensorNode<S>& self) {
                          auto& pa = *self.parents[0];
                          auto& pb = *self.parents[1];
                          if (pa.requires_grad) {
                            auto& g = pa.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i] * pb.value[i];
                          }
                          if (pb.requires_grad) {
                            auto& g = pb.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += self.grad[i] * pa.value[i];
                          }
                        });
}

template <typename S>
BasicTensor<S> scale(const BasicTensor<S>& a, S factor) {
  std::vector<S> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return make_result<S>(a.shape(), std::move(out), {a.node()},
                        [factor](TensorNode<S>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
                        });
}

template <typename S>
BasicTensor<S> relu(const BasicTensor<S>& x) {
  std::vector<S> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] > S(0) ? x.data()[i] : S(0);
  return make_result<S>(x.shape(), std::move(out), {x.node()}, [](TensorNode<S>& self) {
    auto& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (p.value[i] > S(0)) g[i] += self.grad[i];
  });
}

template <typename S>
BasicTensor<S> softmax(const BasicTensor<S>& x) {
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<S> out(x.size());
  kernels::softmax_rows(x.data().data(), out.data(), rows, cols);
  return make_result<S>(x.shape(), std::move(out), {x.node()},
                        [rows, cols](TensorNode<S>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t r = 0; r < rows; ++r) {
                            const S* y = self.value.data() + r * cols;
                            const S* dy = self.grad.data() + r * cols;
                            S dot = 0;
                            for (std::size_t c = 0; c < cols; ++c) dot += dy[c] * y[c];
                            for (std::size_t c = 0; c < cols; ++c)
                              g[r * cols + c] += y[c] * (dy[c] - dot);
                          }
                        });
}

template <typename S>
BasicTensor<S> layer_norm(const BasicTensor<S>& x, const BasicTensor<S>& gain,
                          const BasicTensor<S>& bias, S eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gain.size() != cols || bias.size() != cols) shape_error("layer_norm", x.shape(), gain.shape());
  std::vector<S> out(x.size()), mean(rows), rstd(rows);
  kernels::layer_norm_rows(x.data().data(), gain.data().data(), bias.data().data(), out.data(),
                           mean.data(), rstd.data(), rows, cols, eps);
  return make_result<S>(
      x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
      [rows, cols, mean = std::move(mean), rstd = std::move(rstd)](TensorNode<S>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        std::vector<S> xhat(cols), dxhat(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          const S* xr = px.value.data() + r * cols;
          const S* dy = self.grad.data() + r * cols;
          S sum_d = 0, sum_dx = 0;
          for (std::size_t c = 0; c < cols; ++c) {
            xhat[c] = (xr[c] - mean[r]) * rstd[r];
            dxhat[c] = dy[c] * pg.value[c];
            sum_d += dxhat[c];
            sum_dx += dxhat[c] * xhat[c];
          }
          if (pg.requires_grad) {
            auto& g = pg.grad_buffer();
            for (std::size_t c = 0; c < cols; ++c) g[c] += dy[c] * xhat[c];
          }
          if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t c = 0; c < cols; ++c) g[c] += dy[c];
          }
          if (px.requires_grad) {
            auto& g = px.grad_buffer();
            const S inv_n = S(1) / S(cols);
            for (std::size_t c = 0; c < cols; ++c)
              g[r * cols + c] +=
                  rstd[r] * (dxhat[c] - sum_d * inv_n - xhat[c] * sum_dx * inv_n);
          }
        }
      });
}

template <typename S>
BasicTensor<S> embedding_lookup(const BasicTensor<S>& table, std::span<const int> ids) {
  const std::size_t vocab = table.rows(), dim = table.cols();
  std::vector<S> out(ids.size() * dim);
  std::vector<int> kept(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab)
      throw std::out_of_range("embedding_lookup: id " + std::to_string(ids[i]) +
                              " outside table " + shape_string(table.shape()));
    std::copy_n(table.data().data() + ids[i] * dim, dim, out.data() + i * dim);
  }
  return make_result<S>({ids.size(), dim}, std::move(out), {table.node()},
                        [dim, kept = std::move(kept)](TensorNode<S>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t i = 0; i < kept.size(); ++i)
                            for (std::size_t c = 0; c < dim; ++c)
                              g[kept[i] * dim + c] += self.grad[i * dim + c];
                        });
}

template <typename S>
BasicTensor<S> concat_rows(const std::vector<BasicTensor<S>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  std::vector<NodePtr<S>> parents;
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts[0].shape(), p.shape());
    rows += p.rows();
    parents.push_back(p.node());
  }
  std::vector<S> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result<S>({rows, cols}, std::move(out), std::move(parents),
                        [](TensorNode<S>& self) {
                          std::size_t offset = 0;
                          for (auto& p : self.parents) {
                            if (p->requires_grad) {
                              auto& g = p->grad_buffer();
                              for (std::size_t i = 0; i < g.size(); ++i)
                                g[i] += self.grad[offset + i];
                            }
                            offset += p->value.size();
                          }
                        });
}

template <typename S>
BasicTensor<S> reshape(const BasicTensor<S>& x, Shape shape) {
  if (shape_size(shape) != x.size()) shape_error("reshape", x.shape(), shape);
  std::vector<S> out(x.data().begin(), x.data().end());
  return make_result<S>(std::move(shape), std::move(out), {x.node()}, [](TensorNode<S>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename S>
BasicTensor<S> gather_rows(const BasicTensor<S>& x, std::span<const std::size_t> rows) {
  const std::size_t cols = x.cols(), n = x.rows();
  std::vector<S> out(rows.size() * cols);
  std::vector<std::size_t> kept(rows.begin(), rows.end());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n)
      throw std::out_of_range("gather_rows: row " + std::to_string(rows[i]) + " outside " +
                              shape_string(x.shape()));
    std::copy_n(x.data().data() + rows[i] * cols, cols, out.data() + i * cols);
  }
  return make_result<S>({rows.size(), cols}, std::move(out), {x.node()},
                        [cols, kept = std::move(kept)](TensorNode<S>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          for (std::size_t i = 0; i < kept.size(); ++i)
                            for (std::size_t c = 0; c < cols; ++c)
                              g[kept[i] * cols + c] += self.grad[i * cols + c];
                        });
}

template <typename S>
BasicTensor<S> sum(const BasicTensor<S>& x) {
  S total = 0;
  for (S v : x.data()) total += v;
  return make_result<S>({1}, {total}, {x.node()}, [](TensorNode<S>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename S>
BasicTensor<S> scaled_dot_attention(const BasicTensor<S>& q, const BasicTensor<S>& k,
                                    const BasicTensor<S>& v, const AttentionMask* mask,
                                    std::size_t heads) {
  const std::size_t lq = q.rows(), lk = k.rows(), d = q.cols();
  if (k.cols() != d || v.cols() != d || v.rows() != lk)
    shape_error("scaled_dot_attention", q.shape(), k.shape());
  if (heads == 0 || d % heads != 0)
    throw std::invalid_argument("scaled_dot_attention: width " + std::to_string(d) +
                                " not divisible by " + std::to_string(heads) + " heads");
  if (mask && (mask->rows != lq || mask->cols != lk))
    shape_error("scaled_dot_attention(mask)", {lq, lk}, {mask->rows, mask->cols});
  std::vector<S> out(lq * d);
  std::vector<S> probs(heads * lq * lk);
  kernels::attention(q.data().data(), k.data().data(), v.data().data(),
                     mask ? mask->additive.data() : nullptr, out.data(), probs.data(), lq, lk, d,
                     heads);
  return make_result<S>(
      {lq, d}, std::move(out), {q.node(), k.node(), v.node()},
      [lq, lk, d, heads, probs = std::move(probs)](TensorNode<S>& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pv = *self.parents[2];
        const std::size_t hd = d / heads;
        const S scale_f = S(1) / std::sqrt(S(hd));
        std::vector<S> dp(lk);
        S* gq = pq.requires_grad ? pq.grad_buffer().data() : nullptr;
        S* gk = pk.requires_grad ? pk.grad_buffer().data() : nullptr;
        S* gv = pv.requires_grad ? pv.grad_buffer().data() : nullptr;
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t off = h * hd;
          for (std::size_t i = 0; i < lq; ++i) {
            const S* p = probs.data() + (h * lq + i) * lk;
            const S* dout = self.grad.data() + i * d + off;
            S dot = 0;
            for (std::size_t j = 0; j < lk; ++j) {
              if (p[j] == S(0)) {
                dp[j] = 0;
                continue;
              }
              const S* vj = pv.value.data() + j * d + off;
              S acc = 0;
              for (std::size_t c = 0; c < hd; ++c) acc += dout[c] * vj[c];
              dp[j] = acc;
              dot += acc * p[j];
              if (gv)
                for (std::size_t c = 0; c < hd; ++c) gv[j * d + off + c] += p[j] * dout[c];
            }
            const S* qi = pq.value.data() + i * d + off;
            for (std::size_t j = 0; j < lk; ++j) {
              if (p[j] == S(0)) continue;
              const S ds = p[j] * (dp[j] - dot) * scale_f;
              const S* kj = pk.value.data() + j * d + off;
              if (gq)
                for (std::size_t c = 0; c < hd; ++c) gq[i * d + off + c] += ds * kj[c];
              if (gk)
                for (std::size_t c = 0; c < hd; ++c) gk[j * d + off + c] += ds * qi[c];
            }
          }
        }
      });
}

template <typename S>
BasicTensor<S> cross_entropy(const BasicTensor<S>& logits, std::span<const int> targets) {
  const std::size_t rows = logits.rows(), cols = logits.cols();
  if (targets.size() != rows)
    shape_error("cross_entropy", logits.shape(), {targets.size()});
  std::vector<S> probs(rows * cols);
  kernels::softmax_rows(logits.data().data(), probs.data(), rows, cols);
  std::vector<int> kept(targets.begin(), targets.end());
  S total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (kept[r] < 0 || static_cast<std::size_t>(kept[r]) >= cols)
      throw std::out_of_range("cross_entropy: target " + std::to_string(kept[r]) +
                              " outside " + std::to_string(cols) + " classes");
    // log-sum-exp form keeps saturated logits finite
    const S* x = logits.data().data() + r * cols;
    S max_v = x[0];
    for (std::size_t c = 1; c < cols; ++c) max_v = std::max(max_v, x[c]);
    S z = 0;
    for (std::size_t c = 0; c < cols; ++c) z += std::exp(x[c] - max_v);
    total += max_v + std::log(z) - x[kept[r]];
  }
  const S inv_rows = S(1) / S(rows);
  return make_result<S>({1}, {total * inv_rows}, {logits.node()},
                        [rows, cols, inv_rows, kept = std::move(kept),
                         probs = std::move(probs)](TensorNode<S>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          const S scale_g = self.grad[0] * inv_rows;
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t c = 0; c < cols; ++c) {
                              S onehot = static_cast<int>(c) == kept[r] ? S(1) : S(0);
                              g[r * cols + c] += (probs[r * cols + c] - onehot) * scale_g;
                            }
                        });
}

#define MOTIONLM_INSTANTIATE_OPS(S)                                                              \
  template BasicTensor<S> matmul(const BasicTensor<S>&, const BasicTensor<S>&);                  \
  template BasicTensor<S> add(const BasicTensor<S>&, const BasicTensor<S>&);                     \
  template BasicTensor<S> add_row(const BasicTensor<S>&, const BasicTensor<S>&);                 \
  template BasicTensor<S> mul(const BasicTensor<S>&, const BasicTensor<S>&);                     \
  template BasicTensor<S> scale(const BasicTensor<S>&, S);                                       \
  template BasicTensor<S> relu(const BasicTensor<S>&);                                           \
  template BasicTensor<S> softmax(const BasicTensor<S>&);                                        \
  template BasicTensor<S> layer_norm(const BasicTensor<S>&, const BasicTensor<S>&,               \
                                     const BasicTensor<S>&, S);                                  \
  template BasicTensor<S> embedding_lookup(const BasicTensor<S>&, std::span<const int>);         \
  template BasicTensor<S> concat_rows(const std::vector<BasicTensor<S>>&);                       \
  template BasicTensor<S> reshape(const BasicTensor<S>&, Shape);                                 \
  template BasicTensor<S> gather_rows(const BasicTensor<S>&, std::span<const std::size_t>);      \
  template BasicTensor<S> sum(const BasicTensor<S>&);                                            \
  template BasicTensor<S> scaled_dot_attention(const BasicTensor<S>&, const BasicTensor<S>&,     \
                                               const BasicTensor<S>&, const AttentionMask*,      \
                                               std::size_t);                                     \
  template BasicTensor<S> cross_entropy(const BasicTensor<S>&, std::span<const int>);

MOTIONLM_INSTANTIATE_OPS(float)
MOTIONLM_INSTANTIATE_OPS(double)

}  // namespace motionlm::numeric
