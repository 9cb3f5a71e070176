#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lstn/errors.hpp"

namespace lstn {

// Dense row-major tensor with reverse-mode gradient tracking.
//
// Copies are shallow: a TensorT is a handle onto shared storage, and the
// computation graph is recorded through those handles (each result keeps
// handles to its parents plus a closure that scatters the output gradient
// back to them).  backward() on a scalar runs the closures in reverse
// topological order.  Gradients on leaves accumulate additively until
// zero_grad() is called; gradients on interior nodes are reset at the start
// of every backward pass.
//
// The element type is a template parameter so the same graph code can run
// in 32-bit (production) and 64-bit (gradient-check oracle) arithmetic.
template <typename T>
class TensorT {
 public:
  struct Data {
    std::vector<int> shape;
    std::vector<T> values;
    std::vector<T> grad;  // same length as values while tracking, else empty
    bool requires_grad = false;
    std::vector<TensorT<T>> parents;
    // Receives this node's gradient; accumulates into parent grads.
    std::function<void(std::span<const T>)> backward_fn;
  };

  TensorT() : impl_(std::make_shared<Data>()) {}

  // ---- construction ------------------------------------------------------

  static TensorT zeros(const std::vector<int>& shape) {
    TensorT t;
    t.impl_->shape = checked_shape(shape);
    t.impl_->values.assign(count(shape), T(0));
    return t;
  }

  static TensorT full(const std::vector<int>& shape, T value) {
    TensorT t = zeros(shape);
    for (T& v : t.impl_->values) v = value;
    return t;
  }

  static TensorT from_values(const std::vector<int>& shape, std::vector<T> values) {
    if (values.size() != count(shape))
      throw DimensionError("tensor: value count " + std::to_string(values.size()) +
                           " does not match shape " + shape_string(shape));
    TensorT t;
    t.impl_->shape = checked_shape(shape);
    t.impl_->values = std::move(values);
    return t;
  }

  static TensorT scalar(T value) { return from_values({}, {value}); }

  // Internal factory for op results.  Drops the graph when no parent is
  // tracked so constant subgraphs cost nothing.
  static TensorT with_graph(const std::vector<int>& shape, std::vector<TensorT> parents,
                            std::function<void(std::span<const T>)> backward_fn) {
    TensorT t = zeros(shape);
    bool tracked = false;
    for (const TensorT& p : parents) tracked = tracked || p.requires_grad();
    if (tracked) {
      t.impl_->requires_grad = true;
      t.impl_->grad.assign(t.impl_->values.size(), T(0));
      t.impl_->parents = std::move(parents);
      t.impl_->backward_fn = std::move(backward_fn);
    }
    return t;
  }

  // ---- shape and element access ------------------------------------------

  const std::vector<int>& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(impl_->values.size()); }

  std::span<T> values() { return impl_->values; }
  std::span<const T> values() const { return impl_->values; }

  // Row-major element access, mainly for tests and small kernels.
  template <typename... I>
  T& operator()(I... idx) {
    return impl_->values[offset(idx...)];
  }
  template <typename... I>
  T operator()(I... idx) const {
    return impl_->values[offset(idx...)];
  }

  T item() const {
    if (size() != 1) throw UsageError("item: tensor has " + std::to_string(size()) + " elements, expected 1");
    return impl_->values[0];
  }

  bool same_shape(const TensorT& other) const { return impl_->shape == other.impl_->shape; }

  bool all_finite() const {
    for (T v : impl_->values)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  // ---- gradient machinery --------------------------------------------------

  bool requires_grad() const { return impl_->requires_grad; }

  TensorT& set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (on && impl_->grad.size() != impl_->values.size())
      impl_->grad.assign(impl_->values.size(), T(0));
    if (!on) impl_->grad.clear();
    return *this;
  }

  bool is_leaf() const { return !impl_->backward_fn; }

  // Handles are shallow-const: grad storage stays writable through copies,
  // which is what the backward closures rely on.
  std::span<T> grad() const {
    if (impl_->grad.size() != impl_->values.size())
      throw UsageError("grad: tensor does not track gradients");
    return impl_->grad;
  }

  void zero_grad() {
    for (T& g : impl_->grad) g = T(0);
  }

  // Runs reverse-mode accumulation from this scalar.
  void backward() const {
    if (size() != 1) throw UsageError("backward: loss must be a scalar tensor");
    std::vector<Data*> order;
    topo_sort(order);
    // Interior nodes get a fresh gradient every pass; leaves keep theirs so
    // repeated passes accumulate.
    for (Data* n : order)
      if (n->backward_fn)
        for (T& g : n->grad) g = T(0);
    if (!impl_->grad.empty()) {
      if (impl_->backward_fn)
        impl_->grad[0] = T(1);
      else
        impl_->grad[0] += T(1);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backward_fn) (*it)->backward_fn((*it)->grad);
  }

  // Value copy with no graph attachment.
  TensorT detach() const {
    TensorT t;
    t.impl_->shape = impl_->shape;
    t.impl_->values = impl_->values;
    return t;
  }

  template <typename U>
  TensorT<U> cast() const {
    std::vector<U> v(impl_->values.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<U>(impl_->values[i]);
    TensorT<U> t = TensorT<U>::from_values(impl_->shape, std::move(v));
    if (impl_->requires_grad) t.set_requires_grad(true);
    return t;
  }

  bool same_storage(const TensorT& other) const { return impl_ == other.impl_; }

  static std::string shape_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
  }

 private:
  std::shared_ptr<Data> impl_;

  static size_t count(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
  }

  static std::vector<int> checked_shape(const std::vector<int>& shape) {
    for (int d : shape)
      if (d <= 0) throw DimensionError("tensor: extent " + std::to_string(d) + " in shape " + shape_string(shape));
    return shape;
  }

  template <typename... I>
  size_t offset(I... idx) const {
    const int ix[] = {static_cast<int>(idx)...};
    const size_t n = sizeof...(idx);
    if (n != impl_->shape.size())
      throw DimensionError("tensor: " + std::to_string(n) + " indices into shape " + shape_string(impl_->shape));
    size_t off = 0;
    for (size_t i = 0; i < n; ++i) off = off * static_cast<size_t>(impl_->shape[i]) + static_cast<size_t>(ix[i]);
    return off;
  }

  void topo_sort(std::vector<Data*>& order) const {
    // Iterative post-order DFS over parent edges.
    std::vector<std::pair<Data*, size_t>> stack;
    std::unordered_set<Data*> mark;
    stack.push_back({impl_.get(), 0});
    mark.insert(impl_.get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        Data* p = node->parents[next++].impl_.get();
        if (mark.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  template <typename U>
  friend class TensorT;
};

using Tensor = TensorT<float>;

}  // namespace lstn
