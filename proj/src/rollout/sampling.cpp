#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "motionlm/rollout/rollout.hpp"

namespace motionlm {

NucleusSupport nucleus_support(std::span<const double> probs, double top_p) {
  if (probs.empty()) throw std::invalid_argument("nucleus_support: empty distribution");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("nucleus_support: negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument("nucleus_support: probabilities sum to " + std::to_string(total));
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });
  NucleusSupport out;
  double mass = 0.0;
  for (int id : order) {
    out.ids.push_back(id);
    out.probs.push_back(probs[id]);
    mass += probs[id];
    if (mass >= top_p) break;
  }
  for (double& p : out.probs) p /= mass;
  return out;
}

int sample_nucleus(std::span<const double> probs, double top_p, Rng& rng) {
  const auto support = nucleus_support(probs, top_p);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < support.ids.size(); ++i) {
    acc += support.probs[i];
    if (u < acc) return support.ids[i];
  }
  return support.ids.back();
}

}  // namespace motionlm
