#include "motionlm/numeric/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace motionlm::numeric {

template <typename S>
void adamw_step(ParameterList<S>& params, AdamWState& state, const AdamWConfig& config,
                double lr) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.tensor.size(), 0.0);
      state.second_moment.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size())
    throw std::invalid_argument("adamw_step: optimizer state tracks " +
                                std::to_string(state.first_moment.size()) + " tensors, got " +
                                std::to_string(params.size()));
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto values = p.tensor.mutable_data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != values.size())
      throw std::invalid_argument("adamw_step: state shape mismatch for " + p.name);
    const bool has_grad = p.tensor.has_grad();
    auto grad = p.tensor.grad();
    const double decay = p.decay ? lr * config.weight_decay : 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = has_grad ? static_cast<double>(grad[j]) : 0.0;
      double x = static_cast<double>(values[j]);
      x -= decay * x;
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      x -= lr * mhat / (std::sqrt(vhat) + config.eps);
      values[j] = static_cast<S>(x);
    }
  }
}

double linear_lr(std::int64_t step, std::int64_t total_steps, double lr0) {
  if (total_steps <= 0) return lr0;
  if (step < 0 || step > total_steps)
    throw std::out_of_range("linear_lr: step " + std::to_string(step) + " outside [0, " +
                            std::to_string(total_steps) + "]");
  return lr0 * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
}

template <typename S>
double clip_grad_norm(ParameterList<S>& params, double max_norm) {
  double total = 0.0;
  for (auto& p : params)
    if (p.tensor.has_grad())
      for (S g : p.tensor.grad()) total += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const S factor = static_cast<S>(max_norm / norm);
    for (auto& p : params)
      if (p.tensor.has_grad())
        for (S& g : p.tensor.mutable_grad()) g *= factor;
  }
  return norm;
}

template <typename S>
void zero_grads(ParameterList<S>& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

template void adamw_step<float>(ParameterList<float>&, AdamWState&, const AdamWConfig&, double);
template void adamw_step<double>(ParameterList<double>&, AdamWState&, const AdamWConfig&, double);
template double clip_grad_norm<float>(ParameterList<float>&, double);
template double clip_grad_norm<double>(ParameterList<double>&, double);
template void zero_grads<float>(ParameterList<float>&);
template void zero_grads<double>(ParameterList<double>&);

}  // namespace motionlm::numeric
