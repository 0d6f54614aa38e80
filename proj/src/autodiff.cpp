#include "rbnn/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace rbnn {

const Tensor& Var::value() const {
  if (!valid()) throw std::logic_error("Var::value on empty handle");
  return tape->node(id).value;
}

void Tape::check_owned(const Var& v, const char* op) const {
  if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw std::logic_error(std::string(op) + ": variable does not belong to this tape");
}

Tensor& Tape::grad_buf(int id) {
  Node& n = node(id);
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

int Tape::push(Tensor value, int p0, int p1, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.p0 = p0;
  n.p1 = p1;
  n.requires_grad = wants_grad(p0) || wants_grad(p1);
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(const Var& output) {
  check_owned(output, "backward");
  if (output.value().size() != 1)
    throw std::invalid_argument("backward: output must be scalar");
  for (Node& n : nodes_) n.grad = Tensor();
  grad_buf(output.id)[0] = 1.0;
  for (int i = output.id; i >= 0; --i) {
    Node& n = node(i);
    if (n.grad.empty() || !n.back) continue;
    n.back(*this, i);
  }
}

const Tensor& Tape::grad(const Var& v) const {
  check_owned(v, "grad");
  const Node& n = node(v.id);
  if (n.grad.empty())
    throw std::logic_error("grad: no gradient recorded for this variable");
  return n.grad;
}

bool Tape::has_grad(const Var& v) const {
  check_owned(v, "has_grad");
  return !node(v.id).grad.empty();
}

Var Tape::matmul(Var a, Var b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  const int pa = a.id, pb = b.id;
  int id = push(ops::matmul(a.value(), b.value()), pa, pb, [](Tape& t, int self) {
    const Node& n = t.node(self);
    const Tensor& g = n.grad;
    if (t.wants_grad(n.p0)) ops::matmul_nt_acc(t.grad_buf(n.p0), g, t.node(n.p1).value);
    if (t.wants_grad(n.p1)) ops::matmul_tn_acc(t.grad_buf(n.p1), t.node(n.p0).value, g);
  });
  return Var{this, id};
}

Var Tape::matmul_nt(Var a, Var b) {
  check_owned(a, "matmul_nt");
  check_owned(b, "matmul_nt");
  int id = push(ops::matmul_nt(a.value(), b.value()), a.id, b.id, [](Tape& t, int self) {
    const Node& n = t.node(self);
    const Tensor& g = n.grad;
    if (t.wants_grad(n.p0)) ops::matmul_acc(t.grad_buf(n.p0), g, t.node(n.p1).value);
    if (t.wants_grad(n.p1)) ops::matmul_tn_acc(t.grad_buf(n.p1), g, t.node(n.p0).value);
  });
  return Var{this, id};
}

Var Tape::add(Var a, Var b) {
  check_owned(a, "add");
  check_owned(b, "add");
  int id = push(ops::add(a.value(), b.value()), a.id, b.id, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (t.wants_grad(n.p0)) ops::add_into(t.grad_buf(n.p0), n.grad);
    if (t.wants_grad(n.p1)) ops::add_into(t.grad_buf(n.p1), n.grad);
  });
  return Var{this, id};
}

Var Tape::sub(Var a, Var b) {
  check_owned(a, "sub");
  check_owned(b, "sub");
  int id = push(ops::sub(a.value(), b.value()), a.id, b.id, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (t.wants_grad(n.p0)) ops::add_into(t.grad_buf(n.p0), n.grad);
    if (t.wants_grad(n.p1)) ops::axpy_into(t.grad_buf(n.p1), -1.0, n.grad);
  });
  return Var{this, id};
}

Var Tape::mul(Var a, Var b) {
  check_owned(a, "mul");
  check_owned(b, "mul");
  int id = push(ops::mul(a.value(), b.value()), a.id, b.id, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (t.wants_grad(n.p0))
      ops::add_into(t.grad_buf(n.p0), ops::mul(n.grad, t.node(n.p1).value));
    if (t.wants_grad(n.p1))
      ops::add_into(t.grad_buf(n.p1), ops::mul(n.grad, t.node(n.p0).value));
  });
  return Var{this, id};
}

Var Tape::maximum(Var a, Var b) {
  check_owned(a, "maximum");
  check_owned(b, "maximum");
  // Ties route the gradient to the first operand.
  int id = push(ops::maximum(a.value(), b.value()), a.id, b.id, [](Tape& t, int self) {
    const Node& n = t.node(self);
    const Tensor& av = t.node(n.p0).value;
    const Tensor& bv = t.node(n.p1).value;
    const Tensor& g = n.grad;
    if (t.wants_grad(n.p0)) {
      Tensor& ga = t.grad_buf(n.p0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (av[i] >= bv[i]) ga[i] += g[i];
    }
    if (t.wants_grad(n.p1)) {
      Tensor& gb = t.grad_buf(n.p1);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (av[i] < bv[i]) gb[i] += g[i];
    }
  });
  return Var{this, id};
}

Var Tape::scale(Var a, double c) {
  check_owned(a, "scale");
  int id = push(ops::scale(a.value(), c), a.id, -1, [c](Tape& t, int self) {
    const Node& n = t.node(self);
    if (t.wants_grad(n.p0)) ops::axpy_into(t.grad_buf(n.p0), c, n.grad);
  });
  return Var{this, id};
}

Var Tape::add_scalar(Var a, double c) {
  check_owned(a, "add_scalar");
  int id = push(ops::add_scalar(a.value(), c), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (t.wants_grad(n.p0)) ops::add_into(t.grad_buf(n.p0), n.grad);
  });
  return Var{this, id};
}

Var Tape::add_rowwise(Var m, Var v) {
  check_owned(m, "add_rowwise");
  check_owned(v, "add_rowwise");
  int id = push(ops::add_rowwise(m.value(), v.value()), m.id, v.id, [](Tape& t, int self) {
    const Node& n = t.node(self);
    const Tensor& g = n.grad;
    if (t.wants_grad(n.p0)) ops::add_into(t.grad_buf(n.p0), g);
    if (t.wants_grad(n.p1)) {
      Tensor& gv = t.grad_buf(n.p1);
      const std::size_t rows = g.rows(), cols = g.cols();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) gv[j] += g.at(i, j);
    }
  });
  return Var{this, id};
}

Var Tape::relu(Var a) {
  check_owned(a, "relu");
  // Subgradient 0 at the kink.
  int id = push(ops::relu(a.value()), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (!t.wants_grad(n.p0)) return;
    const Tensor& in = t.node(n.p0).value;
    Tensor& ga = t.grad_buf(n.p0);
    for (std::size_t i = 0; i < in.size(); ++i)
      if (in[i] > 0.0) ga[i] += n.grad[i];
  });
  return Var{this, id};
}

Var Tape::abs(Var a) {
  check_owned(a, "abs");
  // d|x|/dx = sign(x), with subgradient 0 at x = 0.
  int id = push(ops::abs(a.value()), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (!t.wants_grad(n.p0)) return;
    const Tensor& in = t.node(n.p0).value;
    Tensor& ga = t.grad_buf(n.p0);
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] > 0.0)
        ga[i] += n.grad[i];
      else if (in[i] < 0.0)
        ga[i] -= n.grad[i];
    }
  });
  return Var{this, id};
}

Var Tape::exp(Var a) {
  check_owned(a, "exp");
  int id = push(ops::exp(a.value()), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (t.wants_grad(n.p0)) ops::add_into(t.grad_buf(n.p0), ops::mul(n.grad, n.value));
  });
  return Var{this, id};
}

Var Tape::log(Var a) {
  check_owned(a, "log");
  int id = push(ops::log(a.value()), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (!t.wants_grad(n.p0)) return;
    const Tensor& in = t.node(n.p0).value;
    Tensor& ga = t.grad_buf(n.p0);
    for (std::size_t i = 0; i < in.size(); ++i) ga[i] += n.grad[i] / in[i];
  });
  return Var{this, id};
}

Var Tape::clamp_min(Var a, double lo) {
  check_owned(a, "clamp_min");
  int id = push(ops::clamp_min(a.value(), lo), a.id, -1, [lo](Tape& t, int self) {
    const Node& n = t.node(self);
    if (!t.wants_grad(n.p0)) return;
    const Tensor& in = t.node(n.p0).value;
    Tensor& ga = t.grad_buf(n.p0);
    for (std::size_t i = 0; i < in.size(); ++i)
      if (in[i] > lo) ga[i] += n.grad[i];
  });
  return Var{this, id};
}

Var Tape::sum(Var a) {
  check_owned(a, "sum");
  int id = push(ops::sum(a.value()), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (!t.wants_grad(n.p0)) return;
    Tensor& ga = t.grad_buf(n.p0);
    const double g = n.grad[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
  return Var{this, id};
}

Var Tape::softmax(Var a) {
  check_owned(a, "softmax");
  // Per row: dx = p .* (dp - <dp, p>)
  int id = push(ops::softmax(a.value()), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (!t.wants_grad(n.p0)) return;
    const Tensor& p = n.value;
    const Tensor& g = n.grad;
    Tensor& ga = t.grad_buf(n.p0);
    const std::size_t rows = p.rows(), cols = p.cols();
    for (std::size_t i = 0; i < rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * p[i * cols + j];
      for (std::size_t j = 0; j < cols; ++j)
        ga[i * cols + j] += p[i * cols + j] * (g[i * cols + j] - dot);
    }
  });
  return Var{this, id};
}

Var Tape::log_softmax(Var a) {
  check_owned(a, "log_softmax");
  // Per row: dx = dl - softmax(x) * sum(dl)
  int id = push(ops::log_softmax(a.value()), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (!t.wants_grad(n.p0)) return;
    const Tensor& l = n.value;
    const Tensor& g = n.grad;
    Tensor& ga = t.grad_buf(n.p0);
    const std::size_t rows = l.rows(), cols = l.cols();
    for (std::size_t i = 0; i < rows; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gsum += g[i * cols + j];
      for (std::size_t j = 0; j < cols; ++j)
        ga[i * cols + j] += g[i * cols + j] - std::exp(l[i * cols + j]) * gsum;
    }
  });
  return Var{this, id};
}

Var Tape::pick_per_row(Var m, std::vector<int> labels) {
  check_owned(m, "pick_per_row");
  Tensor val = ops::pick_per_row(m.value(), labels);
  int id = push(std::move(val), m.id, -1,
                [labels = std::move(labels)](Tape& t, int self) {
                  const Node& n = t.node(self);
                  if (!t.wants_grad(n.p0)) return;
                  Tensor& gm = t.grad_buf(n.p0);
                  const std::size_t cols = gm.cols();
                  for (std::size_t i = 0; i < labels.size(); ++i)
                    gm[i * cols + static_cast<std::size_t>(labels[i])] += n.grad[i];
                });
  return Var{this, id};
}

Var Tape::case_select(Var lower, Var upper, std::vector<int> labels, bool upper_at_label) {
  check_owned(lower, "case_select");
  check_owned(upper, "case_select");
  Tensor val = ops::case_select(lower.value(), upper.value(), labels, upper_at_label);
  int id = push(std::move(val), lower.id, upper.id,
                [labels = std::move(labels), upper_at_label](Tape& t, int self) {
                  const Node& n = t.node(self);
                  const Tensor& g = n.grad;
                  const std::size_t rows = g.rows(), cols = g.cols();
                  const bool wl = t.wants_grad(n.p0), wu = t.wants_grad(n.p1);
                  if (!wl && !wu) return;
                  Tensor* gl = wl ? &t.grad_buf(n.p0) : nullptr;
                  Tensor* gu = wu ? &t.grad_buf(n.p1) : nullptr;
                  for (std::size_t i = 0; i < rows; ++i) {
                    const std::size_t y = static_cast<std::size_t>(labels[i]);
                    for (std::size_t j = 0; j < cols; ++j) {
                      const bool take_upper = (j == y) == upper_at_label;
                      if (take_upper) {
                        if (gu) (*gu)[i * cols + j] += g[i * cols + j];
                      } else {
                        if (gl) (*gl)[i * cols + j] += g[i * cols + j];
                      }
                    }
                  }
                });
  return Var{this, id};
}

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
  check_owned(a, "reshape");
  Tensor val = a.value().reshaped(shape);
  int id = push(std::move(val), a.id, -1, [](Tape& t, int self) {
    const Node& n = t.node(self);
    if (!t.wants_grad(n.p0)) return;
    Tensor& ga = t.grad_buf(n.p0);
    const Tensor& g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  return Var{this, id};
}

}  // namespace rbnn
