#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rbnn {

// Dense row-major tensor of 64-bit reals. Library operations never mutate
// their inputs, so a constructed Tensor can be shared freely across threads.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor full(std::vector<std::size_t> shape, double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Row/column view of the trailing two conventions: rank-1 tensors are
  // treated as a single row where a matrix is expected.
  std::size_t rows() const;
  std::size_t cols() const;

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  double item() const;  // value of a size-1 tensor

  Tensor reshaped(std::vector<std::size_t> shape) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

namespace ops {

// Matrix products. _nt multiplies by the transpose of b (a * b^T), _tn by the
// transpose of a (a^T * b); the _acc variants accumulate into dst.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);
void matmul_acc(Tensor& dst, const Tensor& a, const Tensor& b);
void matmul_nt_acc(Tensor& dst, const Tensor& a, const Tensor& b);
void matmul_tn_acc(Tensor& dst, const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double c);
Tensor maximum(const Tensor& a, const Tensor& b);

// M[i,:] + v for every row i.
Tensor add_rowwise(const Tensor& m, const Tensor& v);

Tensor relu(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sign(const Tensor& a);  // sign(0) = 0
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor sum(const Tensor& a);  // scalar

// Row-wise softmax / log-softmax with max-subtraction; rank-1 input is a
// single row. Throws on non-finite input.
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);

// out[i] = m[i, labels[i]]
Tensor pick_per_row(const Tensor& m, std::span<const int> labels);

// out[i,j] = (j == labels[i]) ? lower[i,j] : upper[i,j]; the roles of the two
// operands swap when upper_at_label is set.
Tensor case_select(const Tensor& lower, const Tensor& upper,
                   std::span<const int> labels, bool upper_at_label);

void add_into(Tensor& dst, const Tensor& src);
void axpy_into(Tensor& dst, double a, const Tensor& src);

std::size_t argmax(std::span<const double> v);  // first index of the maximum

}  // namespace ops
}  // namespace rbnn
