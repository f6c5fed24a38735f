#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrdie::nn {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense rank-2 array of doubles, row-major. Vectors are 1×n rows.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
      throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                       " does not match shape [" + std::to_string(rows) + "," +
                       std::to_string(cols) + "]");
    }
  }
  static Tensor row(std::initializer_list<double> values) {
    return Tensor(1, values.size(), std::vector<double>(values));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  std::string shape_str() const {
    return "[" + std::to_string(rows_) + "," + std::to_string(cols_) + "]";
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline bool all_finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: " + a.shape_str() + " vs " + b.shape_str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

namespace kernel {

// c += a · b, a: n×k, b: k×m, c: n×m
inline void matmul_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                       std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// c += a · bᵀ, a: n×m, b: k×m, c: n×k
inline void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
                          std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += ai[j] * bp[j];
      c[i * k + p] += s;
    }
  }
}

// c += aᵀ · b, a: n×k, b: n×m, c: k×m
inline void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                          std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace kernel

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
  Tensor c(a.rows(), b.cols());
  kernel::matmul_acc(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

}  // namespace vrdie::nn
