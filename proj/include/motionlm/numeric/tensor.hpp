#pragma once

// Dense tensors with tape-based reverse-mode differentiation.
//
// Every op that reads a tensor requiring gradients records its parents and a
// backward closure on the output node; the resulting DAG is the tape.
// `backward(loss)` visits it once in reverse topological order. Recording is
// skipped entirely while a NoGradGuard is alive on the current thread.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace motionlm::numeric {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

template <typename S>
struct TensorNode {
  Shape shape;
  std::vector<S> value;
  std::vector<S> grad;  // empty until first touched by backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;

  std::vector<S>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), S(0));
    return grad;
  }
};

template <typename S>
class BasicTensor {
 public:
  using Node = TensorNode<S>;
  using Scalar = S;

  BasicTensor() = default;
  explicit BasicTensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor from(Shape shape, std::vector<S> values, bool requires_grad = false);
  static BasicTensor scalar(S value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return node_->value.size(); }

  std::span<const S> data() const { return node_->value; }
  std::span<S> mutable_data() { return node_->value; }
  std::span<const S> grad() const { return node_->grad; }
  std::span<S> mutable_grad() { return node_->grad_buffer(); }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  S item() const;
  S at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using Tensor = BasicTensor<float>;

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Runs reverse-mode differentiation from a scalar loss. Gradients accumulate
// into every reachable node that requires them (leaves included).
template <typename S>
void backward(const BasicTensor<S>& loss);

}  // namespace motionlm::numeric
