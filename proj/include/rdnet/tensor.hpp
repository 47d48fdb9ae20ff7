#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rdnet/errors.hpp"

namespace rdnet {

inline std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int e : shape) n *= e;
  return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace detail {

template <typename S>
struct Node {
  std::vector<int> shape;
  std::vector<S> data;
  std::vector<S> grad;  // empty until first needed
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }
};

}  // namespace detail

// Dense N-d value array with an optional gradient slot. Row-major, last axis
// fastest. Copies are shallow: they alias the same storage, which is what the
// tape needs. Values are treated as immutable once an op has consumed them.
template <typename S>
class TensorT {
 public:
  using Scalar = S;
  using Node = detail::Node<S>;

  TensorT() = default;

  static TensorT zeros(std::vector<int> shape, bool requires_grad = false) {
    return filled(std::move(shape), S(0), requires_grad);
  }

  static TensorT filled(std::vector<int> shape, S value, bool requires_grad = false) {
    TensorT t;
    t.node_ = std::make_shared<Node>();
    t.node_->data.assign(std::size_t(shape_size(shape)), value);
    t.node_->shape = std::move(shape);
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static TensorT from_data(std::vector<int> shape, std::vector<S> data,
                           bool requires_grad = false) {
    if (shape_size(shape) != std::int64_t(data.size()))
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    TensorT t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = std::move(shape);
    t.node_->data = std::move(data);
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static TensorT scalar(S value, bool requires_grad = false) {
    return from_data({1}, {value}, requires_grad);
  }

  // Low-level node factory used by ops. The backward callback pulls the
  // gradient of `self` and accumulates into the parents' grad buffers.
  static TensorT make(std::vector<int> shape, std::vector<S> data,
                      const std::vector<TensorT>& parents,
                      std::function<void(Node&)> backward_fn) {
    TensorT t = from_data(std::move(shape), std::move(data), false);
    bool rg = false;
    for (const TensorT& p : parents) rg = rg || p.requires_grad();
    t.node_->requires_grad = rg;
    if (rg) {
      for (const TensorT& p : parents) t.node_->parents.push_back(p.node_);
      t.node_->backward_fn = std::move(backward_fn);
    }
    return t;
  }

  bool defined() const { return bool(node_); }
  const std::vector<int>& shape() const { return node_->shape; }
  std::int64_t size() const { return std::int64_t(node_->data.size()); }

  std::vector<S>& data() { return node_->data; }
  const std::vector<S>& data() const { return node_->data; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

  std::vector<S>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<S>& grad() const { return node_->grad; }

  void zero_grad() {
    node_->ensure_grad();
    std::fill(node_->grad.begin(), node_->grad.end(), S(0));
  }

  S value() const {
    if (size() != 1) throw ShapeError("value() requires a scalar tensor, got " + shape_str(shape()));
    return node_->data[0];
  }

  // Reverse-mode sweep from a scalar result.
  void backward() const {
    if (!node_) throw std::logic_error("backward() on an undefined tensor");
    if (node_->data.size() != 1)
      throw ShapeError("backward() requires a scalar root, got " + shape_str(node_->shape));

    // Iterative DFS topological order over grad-requiring nodes.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
      Node* n = stack.back().first;
      std::size_t i = stack.back().second;
      if (i < n->parents.size()) {
        ++stack.back().second;
        Node* p = n->parents[i].get();
        if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }

    node_->ensure_grad();
    node_->grad[0] += S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using Tensor = TensorT<float>;

}  // namespace rdnet
