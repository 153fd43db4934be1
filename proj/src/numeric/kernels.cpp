#include "motionlm/numeric/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

namespace motionlm::kernels {

namespace {

constexpr std::size_t kParallelWork = 1 << 15;

int initial_workers() {
  if (const char* env = std::getenv("MOTIONLM_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

int& workers() {
  static int n = initial_workers();
  return n;
}

template <typename S>
void softmax_row(const S* x, S* y, std::size_t cols) {
  S max_v = -std::numeric_limits<S>::infinity();
  for (std::size_t j = 0; j < cols; ++j) max_v = std::max(max_v, x[j]);
  if (!std::isfinite(max_v)) {
    std::fill(y, y + cols, S(0));
    return;
  }
  S sum = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    S e = std::isinf(x[j]) ? S(0) : std::exp(x[j] - max_v);
    y[j] = e;
    sum += e;
  }
  S inv = S(1) / sum;
  for (std::size_t j = 0; j < cols; ++j) y[j] *= inv;
}

template <typename S>
void layer_norm_row(const S* x, const S* gain, const S* bias, S* y, S* mean_out, S* rstd_out,
                    std::size_t cols, S eps) {
  S mean = 0;
  for (std::size_t j = 0; j < cols; ++j) mean += x[j];
  mean /= S(cols);
  S var = 0;
  for (std::size_t j = 0; j < cols; ++j) var += (x[j] - mean) * (x[j] - mean);
  var /= S(cols);
  S rstd = S(1) / std::sqrt(var + eps);
  for (std::size_t j = 0; j < cols; ++j) y[j] = (x[j] - mean) * rstd * gain[j] + bias[j];
  if (mean_out) *mean_out = mean;
  if (rstd_out) *rstd_out = rstd;
}

// One (head, query row) of attention. Masked keys are skipped entirely so the
// values behind a -inf entry never enter any arithmetic.
template <typename S>
void attention_row(const S* q, const S* k, const S* v, const float* mask_row, S* out, S* probs,
                   std::size_t lk, std::size_t d, std::size_t hd, std::size_t offset,
                   S* scratch) {
  const S scale = S(1) / std::sqrt(S(hd));
  S max_v = -std::numeric_limits<S>::infinity();
  for (std::size_t j = 0; j < lk; ++j) {
    if (mask_row && std::isinf(mask_row[j])) {
      scratch[j] = -std::numeric_limits<S>::infinity();
      continue;
    }
    const S* kj = k + j * d + offset;
    S dot = 0;
    for (std::size_t c = 0; c < hd; ++c) dot += q[c] * kj[c];
    S s = dot * scale + (mask_row ? S(mask_row[j]) : S(0));
    scratch[j] = s;
    max_v = std::max(max_v, s);
  }
  for (std::size_t c = 0; c < hd; ++c) out[c] = 0;
  if (!std::isfinite(max_v)) {
    if (probs) std::fill(probs, probs + lk, S(0));
    return;
  }
  S sum = 0;
  for (std::size_t j = 0; j < lk; ++j) {
    S e = std::isinf(scratch[j]) ? S(0) : std::exp(scratch[j] - max_v);
    scratch[j] = e;
    sum += e;
  }
  S inv = S(1) / sum;
  for (std::size_t j = 0; j < lk; ++j) {
    S p = scratch[j] * inv;
    scratch[j] = p;
    if (probs) probs[j] = p;
    if (p == S(0)) continue;
    const S* vj = v + j * d + offset;
    for (std::size_t c = 0; c < hd; ++c) out[c] += p * vj[c];
  }
}

}  // namespace

int worker_count() { return workers(); }
void set_worker_count(int n) { workers() = std::max(1, n); }

template <typename S>
void matmul(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate) {
  const bool par = m * k * n >= kParallelWork && m > 1;
#pragma omp parallel for schedule(static) if (par) num_threads(worker_count())
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    S* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, S(0));
    const S* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const S aip = ai[p];
      const S* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

template <typename S>
void matmul_nt(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  const bool par = m * k * n >= kParallelWork && m > 1;
#pragma omp parallel for schedule(static) if (par) num_threads(worker_count())
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    const S* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const S* bj = b + j * k;
      S dot = 0;
      for (std::size_t p = 0; p < k; ++p) dot += ai[p] * bj[p];
      c[i * n + j] = accumulate ? c[i * n + j] + dot : dot;
    }
  }
}

template <typename S>
void matmul_tn(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  const bool par = m * k * n >= kParallelWork && m > 1;
#pragma omp parallel for schedule(static) if (par) num_threads(worker_count())
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    S* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, S(0));
    for (std::size_t p = 0; p < k; ++p) {
      const S api = a[p * m + i];
      if (api == S(0)) continue;
      const S* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

template <typename S>
void softmax_rows(const S* x, S* y, std::size_t rows, std::size_t cols) {
  const bool par = rows * cols >= kParallelWork;
#pragma omp parallel for schedule(static) if (par) num_threads(worker_count())
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i)
    softmax_row(x + i * cols, y + i * cols, cols);
}

template <typename S>
void layer_norm_rows(const S* x, const S* gain, const S* bias, S* y, S* mean, S* rstd,
                     std::size_t rows, std::size_t cols, S eps) {
  const bool par = rows * cols >= kParallelWork;
#pragma omp parallel for schedule(static) if (par) num_threads(worker_count())
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i)
    layer_norm_row(x + i * cols, gain, bias, y + i * cols, mean ? mean + i : nullptr,
                   rstd ? rstd + i : nullptr, cols, eps);
}

template <typename S>
void attention(const S* q, const S* k, const S* v, const float* mask, S* out, S* probs,
               std::size_t lq, std::size_t lk, std::size_t d, std::size_t heads) {
  const std::size_t hd = d / heads;
  const std::size_t jobs = heads * lq;
  const bool par = jobs * lk * hd >= kParallelWork;
#pragma omp parallel if (par) num_threads(worker_count())
  {
    std::vector<S> scratch(lk);
#pragma omp for schedule(static)
    for (std::ptrdiff_t job = 0; job < static_cast<std::ptrdiff_t>(jobs); ++job) {
      const std::size_t h = static_cast<std::size_t>(job) / lq;
      const std::size_t i = static_cast<std::size_t>(job) % lq;
      const std::size_t off = h * hd;
      attention_row(q + i * d + off, k, v, mask ? mask + i * lk : nullptr, out + i * d + off,
                    probs ? probs + (h * lq + i) * lk : nullptr, lk, d, hd, off, scratch.data());
    }
  }
}

namespace reference {

template <typename S>
void matmul(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      S acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
}

template <typename S>
void matmul_nt(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      S acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
}

template <typename S>
void matmul_tn(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      S acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
}

template <typename S>
void softmax_rows(const S* x, S* y, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) softmax_row(x + i * cols, y + i * cols, cols);
}

template <typename S>
void layer_norm_rows(const S* x, const S* gain, const S* bias, S* y, S* mean, S* rstd,
                     std::size_t rows, std::size_t cols, S eps) {
  for (std::size_t i = 0; i < rows; ++i)
    layer_norm_row(x + i * cols, gain, bias, y + i * cols, mean ? mean + i : nullptr,
                   rstd ? rstd + i : nullptr, cols, eps);
}

template <typename S>
void attention(const S* q, const S* k, const S* v, const float* mask, S* out, S* probs,
               std::size_t lq, std::size_t lk, std::size_t d, std::size_t heads) {
  const std::size_t hd = d / heads;
  std::vector<S> scratch(lk);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < lq; ++i)
      attention_row(q + i * d + h * hd, k, v, mask ? mask + i * lk : nullptr, out + i * d + h * hd,
                    probs ? probs + (h * lq + i) * lk : nullptr, lk, d, hd, h * hd,
                    scratch.data());
}

}  // namespace reference
}  // namespace motionlm::kernels

#define MOTIONLM_INSTANTIATE_KERNELS(NS, S)                                                      \
  template void NS::matmul<S>(const S*, const S*, S*, std::size_t, std::size_t, std::size_t,     \
                              bool);                                                             \
  template void NS::matmul_nt<S>(const S*, const S*, S*, std::size_t, std::size_t, std::size_t,  \
                                 bool);                                                          \
  template void NS::matmul_tn<S>(const S*, const S*, S*, std::size_t, std::size_t, std::size_t,  \
                                 bool);                                                          \
  template void NS::softmax_rows<S>(const S*, S*, std::size_t, std::size_t);                     \
  template void NS::layer_norm_rows<S>(const S*, const S*, const S*, S*, S*, S*, std::size_t,    \
                                       std::size_t, S);                                          \
  template void NS::attention<S>(const S*, const S*, const S*, const float*, S*, S*,             \
                                 std::size_t, std::size_t, std::size_t, std::size_t);

MOTIONLM_INSTANTIATE_KERNELS(motionlm::kernels, float)
MOTIONLM_INSTANTIATE_KERNELS(motionlm::kernels, double)
MOTIONLM_INSTANTIATE_KERNELS(motionlm::kernels::reference, float)
MOTIONLM_INSTANTIATE_KERNELS(motionlm::kernels::reference, double)
