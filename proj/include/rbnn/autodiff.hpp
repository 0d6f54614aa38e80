#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rbnn/tensor.hpp"

namespace rbnn {

class Tape;

// Handle to a tensor recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode gradient tape. Records primitive operations in topological
// (creation) order; backward() visits each node exactly once in reverse.
// A tape is confined to a single thread for its lifetime.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);

  // Propagates gradients from a scalar output to every leaf that requires
  // them. Values of earlier backward passes on the same tape are discarded.
  void backward(const Var& output);

  const Tensor& grad(const Var& v) const;
  bool has_grad(const Var& v) const;

  // Drops all nodes but keeps allocated capacity, for reuse across steps.
  void clear() { nodes_.clear(); }
  std::size_t node_count() const { return nodes_.size(); }

  // --- recorded operations ---
  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var maximum(Var a, Var b);
  Var scale(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }
  Var add_scalar(Var a, double c);
  Var add_rowwise(Var m, Var v);
  Var relu(Var a);
  Var abs(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var clamp_min(Var a, double lo);
  Var sum(Var a);
  Var softmax(Var a);
  Var log_softmax(Var a);
  Var pick_per_row(Var m, std::vector<int> labels);
  Var case_select(Var lower, Var upper, std::vector<int> labels, bool upper_at_label);
  Var reshape(Var a, std::vector<std::size_t> shape);

 private:
  struct Node {
    Tensor value;
    Tensor grad;          // empty until touched by backward
    bool requires_grad = false;
    int p0 = -1, p1 = -1;
    // Pushes this node's gradient into its parents' buffers.
    std::function<void(Tape&, int)> back;
  };

  friend struct Var;

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  void check_owned(const Var& v, const char* op) const;
  bool wants_grad(int id) const { return id >= 0 && node(id).requires_grad; }
  Tensor& grad_buf(int id);
  int push(Tensor value, int p0, int p1, std::function<void(Tape&, int)> back);

  std::vector<Node> nodes_;
};

}  // namespace rbnn
