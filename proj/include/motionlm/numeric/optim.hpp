#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motionlm/numeric/tensor.hpp"

namespace motionlm::numeric {

template <typename S>
struct NamedParameter {
  std::string name;
  BasicTensor<S> tensor;
  bool decay = true;  // weight decay applies (matrices and embeddings)
};

template <typename S>
using ParameterList = std::vector<NamedParameter<S>>;

struct AdamWConfig {
  double lr = 0.0006;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.6;
};

struct AdamWState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Decoupled-weight-decay Adam. `lr` overrides config.lr (the schedule value).
// Parameters without a gradient buffer are treated as having zero gradient.
template <typename S>
void adamw_step(ParameterList<S>& params, AdamWState& state, const AdamWConfig& config, double lr);

// lr0 * (1 - step / total_steps)
double linear_lr(std::int64_t step, std::int64_t total_steps, double lr0);

// Scales all gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
template <typename S>
double clip_grad_norm(ParameterList<S>& params, double max_norm);

template <typename S>
void zero_grads(ParameterList<S>& params);

}  // namespace motionlm::numeric
