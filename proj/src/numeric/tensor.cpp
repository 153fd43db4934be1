#include "motionlm/numeric/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace motionlm::numeric {

namespace {
thread_local bool g_grad_enabled = true;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename S>
BasicTensor<S> BasicTensor<S>::zeros(Shape shape, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(shape_size(shape), S(0));
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename S>
BasicTensor<S> BasicTensor<S>::from(Shape shape, std::vector<S> values, bool requires_grad) {
  if (shape_size(shape) != values.size())
    throw std::invalid_argument("tensor shape " + shape_string(shape) + " does not match " +
                                std::to_string(values.size()) + " values");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename S>
BasicTensor<S> BasicTensor<S>::scalar(S value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

template <typename S>
std::size_t BasicTensor<S>::rows() const {
  const auto& s = node_->shape;
  if (s.size() == 1) return 1;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) r *= s[i];
  return r;
}

template <typename S>
std::size_t BasicTensor<S>::cols() const {
  return node_->shape.empty() ? 1 : node_->shape.back();
}

template <typename S>
S BasicTensor<S>::item() const {
  if (size() != 1) throw std::logic_error("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

template <typename S>
void backward(const BasicTensor<S>& loss) {
  if (loss.size() != 1)
    throw std::invalid_argument("backward() needs a scalar loss, got " +
                                shape_string(loss.shape()));
  using NodePtr = TensorNode<S>*;
  std::vector<NodePtr> order;
  std::unordered_set<NodePtr> done;
  std::unordered_set<NodePtr> active;
  // Iterative post-order DFS.
  std::vector<std::pair<NodePtr, std::size_t>> stack{{loss.node().get(), 0}};
  active.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodePtr parent = node->parents[next++].get();
      if (!parent->requires_grad || done.count(parent)) continue;
      if (active.count(parent)) throw std::logic_error("autograd tape contains a cycle");
      active.insert(parent);
      stack.emplace_back(parent, 0);
      continue;
    }
    active.erase(node);
    done.insert(node);
    order.push_back(node);
    stack.pop_back();
  }
  loss.node()->grad_buffer()[0] += S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodePtr node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void backward<float>(const BasicTensor<float>&);
template void backward<double>(const BasicTensor<double>&);

}  // namespace motionlm::numeric
