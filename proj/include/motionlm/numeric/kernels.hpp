#pragma once

// Dense row-major kernels used by the tensor ops and the inference engine.
//
// The functions in `motionlm::kernels` are OpenMP-parallel over output rows.
// Every output element is reduced by exactly one thread in a fixed order, so
// results do not depend on the worker count. `motionlm::kernels::reference`
// holds plain serial loops with the same contracts; tests compare the two and
// the benchmark target times them side by side.

#include <cstddef>

namespace motionlm::kernels {

// c[m x n] (+)= a[m x k] * b[k x n]
template <typename S>
void matmul(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate = false);

// c[m x n] (+)= a[m x k] * b[n x k]^T
template <typename S>
void matmul_nt(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate = false);

// c[m x n] (+)= a[k x m]^T * b[k x n]
template <typename S>
void matmul_tn(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate = false);

// Row-wise softmax over `cols` entries; -inf entries get probability 0 and a
// row with no finite entry becomes all zeros.
template <typename S>
void softmax_rows(const S* x, S* y, std::size_t rows, std::size_t cols);

// Row-wise layer norm with per-column gain and bias. `mean` and `rstd` (one
// entry per row) are written when non-null.
template <typename S>
void layer_norm_rows(const S* x, const S* gain, const S* bias, S* y, S* mean, S* rstd,
                     std::size_t rows, std::size_t cols, S eps);

// Multi-head scaled dot-product attention.
//   q[lq x d], k[lk x d], v[lk x d], additive mask[lq x lk] (nullptr: no mask)
//   out[lq x d]; probs (optional) [heads x lq x lk]
template <typename S>
void attention(const S* q, const S* k, const S* v, const float* mask, S* out, S* probs,
               std::size_t lq, std::size_t lk, std::size_t d, std::size_t heads);

namespace reference {

template <typename S>
void matmul(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate = false);
template <typename S>
void matmul_nt(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate = false);
template <typename S>
void matmul_tn(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate = false);
template <typename S>
void softmax_rows(const S* x, S* y, std::size_t rows, std::size_t cols);
template <typename S>
void layer_norm_rows(const S* x, const S* gain, const S* bias, S* y, S* mean, S* rstd,
                     std::size_t rows, std::size_t cols, S eps);
template <typename S>
void attention(const S* q, const S* k, const S* v, const float* mask, S* out, S* probs,
               std::size_t lq, std::size_t lk, std::size_t d, std::size_t heads);

}  // namespace reference

// Worker count for the parallel kernels; reads MOTIONLM_WORKERS once.
int worker_count();
void set_worker_count(int n);

}  // namespace motionlm::kernels
