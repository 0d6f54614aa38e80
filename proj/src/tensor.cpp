#include "rbnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rbnn {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

[[noreturn]] void shape_error(const std::string& what) {
  throw std::invalid_argument("tensor shape mismatch: " + what);
}

void require_matrix_like(const Tensor& t, const char* name) {
  if (t.rank() != 1 && t.rank() != 2)
    shape_error(std::string(name) + " must be rank 1 or 2");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size())
    shape_error("data length does not match shape");
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() == 1) return 1;
  if (rank() == 2) return shape_[0];
  shape_error("rows() on tensor of rank > 2");
}

std::size_t Tensor::cols() const {
  if (rank() == 1) return shape_[0];
  if (rank() == 2) return shape_[1];
  shape_error("cols() on tensor of rank > 2");
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::item() const {
  if (size() != 1) shape_error("item() on tensor with size != 1");
  return data_[0];
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (shape_product(shape) != size()) shape_error("reshape changes element count");
  return Tensor(std::move(shape), data_);
}

namespace ops {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) shape_error(std::string(op) + ": operand shapes differ");
}

Tensor elementwise(const Tensor& a, const Tensor& b, const char* op,
                   double (*f)(double, double)) {
  require_same_shape(a, b, op);
  Tensor out(a.shape());
  const auto pa = a.data();
  const auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  matmul_acc(out, a, b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.rows()});
  matmul_nt_acc(out, a, b);
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  Tensor out({a.cols(), b.cols()});
  matmul_tn_acc(out, a, b);
  return out;
}

void matmul_acc(Tensor& dst, const Tensor& a, const Tensor& b) {
  require_matrix_like(a, "matmul lhs");
  require_matrix_like(b, "matmul rhs");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("matmul: inner dimensions disagree");
  if (dst.rows() != m || dst.cols() != n) shape_error("matmul: bad destination");
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = dst.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = pa + i * k;
    double* ci = pc + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = ai[l];
      if (av == 0.0) continue;
      const double* bl = pb + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nt_acc(Tensor& dst, const Tensor& a, const Tensor& b) {
  require_matrix_like(a, "matmul_nt lhs");
  require_matrix_like(b, "matmul_nt rhs");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) shape_error("matmul_nt: inner dimensions disagree");
  if (dst.rows() != m || dst.cols() != n) shape_error("matmul_nt: bad destination");
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = dst.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = pa + i * k;
    double* ci = pc + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = pb + j * k;
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      ci[j] += acc;
    }
  }
}

void matmul_tn_acc(Tensor& dst, const Tensor& a, const Tensor& b) {
  require_matrix_like(a, "matmul_tn lhs");
  require_matrix_like(b, "matmul_tn rhs");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != m) shape_error("matmul_tn: inner dimensions disagree");
  if (dst.rows() != k || dst.cols() != n) shape_error("matmul_tn: bad destination");
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = dst.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = pa + i * k;
    const double* bi = pb + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = ai[l];
      if (av == 0.0) continue;
      double* cl = pc + l * n;
      for (std::size_t j = 0; j < n; ++j) cl[j] += av * bi[j];
    }
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, "maximum", [](double x, double y) { return x >= y ? x : y; });
}

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = pa[i] * c;
  return out;
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = pa[i] + c;
  return out;
}

Tensor add_rowwise(const Tensor& m, const Tensor& v) {
  require_matrix_like(m, "add_rowwise lhs");
  if (v.rank() != 1) shape_error("add_rowwise: bias must be rank 1");
  const std::size_t rows = m.rows(), cols = m.cols();
  if (v.size() != cols) shape_error("add_rowwise: bias length != column count");
  Tensor out(m.shape());
  const double* pm = m.data().data();
  const double* pv = v.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) po[i * cols + j] = pm[i * cols + j] + pv[j];
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  return out;
}

Tensor abs(const Tensor& a) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = std::fabs(pa[i]);
  return out;
}

Tensor sign(const Tensor& a) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i)
    po[i] = pa[i] > 0.0 ? 1.0 : (pa[i] < 0.0 ? -1.0 : 0.0);
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = std::exp(pa[i]);
  return out;
}

Tensor log(const Tensor& a) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!(pa[i] > 0.0))
      throw std::domain_error("log: input must be strictly positive");
    po[i] = std::log(pa[i]);
  }
  return out;
}

Tensor clamp_min(const Tensor& a, double lo) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) po[i] = pa[i] > lo ? pa[i] : lo;
  return out;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  Tensor out(a.shape());
  const auto pa = a.data();
  auto po = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i)
    po[i] = pa[i] < lo ? lo : (pa[i] > hi ? hi : pa[i]);
  return out;
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return Tensor::scalar(acc);
}

Tensor softmax(const Tensor& a) {
  require_matrix_like(a, "softmax");
  if (!a.all_finite()) throw std::domain_error("softmax: non-finite input");
  const std::size_t rows = a.rows(), cols = a.cols();
  Tensor out(a.shape());
  const double* pa = a.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = pa + i * cols;
    double* y = po + i * cols;
    double mx = x[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
  }
  return out;
}

Tensor log_softmax(const Tensor& a) {
  require_matrix_like(a, "log_softmax");
  if (!a.all_finite()) throw std::domain_error("log_softmax: non-finite input");
  const std::size_t rows = a.rows(), cols = a.cols();
  Tensor out(a.shape());
  const double* pa = a.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = pa + i * cols;
    double* y = po + i * cols;
    double mx = x[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(x[j] - mx);
    const double lz = std::log(z);
    for (std::size_t j = 0; j < cols; ++j) y[j] = x[j] - mx - lz;
  }
  return out;
}

Tensor pick_per_row(const Tensor& m, std::span<const int> labels) {
  require_matrix_like(m, "pick_per_row");
  const std::size_t rows = m.rows(), cols = m.cols();
  if (labels.size() != rows) shape_error("pick_per_row: one label per row required");
  Tensor out({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= cols)
      throw std::out_of_range("pick_per_row: label out of range");
    out[i] = m.at(i, static_cast<std::size_t>(y));
  }
  return out;
}

Tensor case_select(const Tensor& lower, const Tensor& upper,
                   std::span<const int> labels, bool upper_at_label) {
  require_same_shape(lower, upper, "case_select");
  require_matrix_like(lower, "case_select");
  const std::size_t rows = lower.rows(), cols = lower.cols();
  if (labels.size() != rows) shape_error("case_select: one label per row required");
  Tensor out(lower.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= cols)
      throw std::out_of_range("case_select: label out of range");
    for (std::size_t j = 0; j < cols; ++j) {
      const bool at_label = (j == static_cast<std::size_t>(y));
      const bool take_upper = at_label == upper_at_label;
      out.at(i, j) = take_upper ? upper.at(i, j) : lower.at(i, j);
    }
  }
  return out;
}

void add_into(Tensor& dst, const Tensor& src) {
  require_same_shape(dst, src, "add_into");
  auto pd = dst.data();
  const auto ps = src.data();
  for (std::size_t i = 0; i < pd.size(); ++i) pd[i] += ps[i];
}

void axpy_into(Tensor& dst, double a, const Tensor& src) {
  require_same_shape(dst, src, "axpy_into");
  auto pd = dst.data();
  const auto ps = src.data();
  for (std::size_t i = 0; i < pd.size(); ++i) pd[i] += a * ps[i];
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace ops
}  // namespace rbnn
