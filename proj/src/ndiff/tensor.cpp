#include "elue/ndiff/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "elue/error.hpp"

namespace elue::ndiff {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
  if (shape.empty()) return "()";
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), values_(element_count(shape_), 0.0) {
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor: dimensions must be positive, got " + shape_string(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor: dimensions must be positive, got " + shape_string(shape_));
  }
  if (element_count(shape_) != values_.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape_) + " needs " +
                     std::to_string(element_count(shape_)) + " values, got " +
                     std::to_string(values_.size()));
  }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, value));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::row(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

std::size_t Tensor::rows() const {
  switch (shape_.size()) {
    case 0:
    case 1:
      return 1;
    case 2:
      return shape_[0];
    default:
      throw ShapeError("tensor: rank " + std::to_string(shape_.size()) + " has no matrix view");
  }
}

std::size_t Tensor::cols() const {
  switch (shape_.size()) {
    case 0:
      return 1;
    case 1:
      return shape_[0];
    case 2:
      return shape_[1];
    default:
      throw ShapeError("tensor: rank " + std::to_string(shape_.size()) + " has no matrix view");
  }
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ShapeError("tensor: item() on shape " + shape_string(shape_));
  }
  return values_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor hcat(std::initializer_list<std::reference_wrapper<const Tensor>> parts) {
  if (parts.size() == 0) throw ShapeError("hcat needs at least one part");
  const std::size_t n = parts.begin()->get().rows();
  std::size_t width = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != n) throw ShapeError("hcat: row counts differ (" + shape_string(p.shape()) + ")");
    width += p.cols();
  }
  Tensor out = Tensor::zeros(n, width);
  std::size_t c0 = 0;
  for (const Tensor& p : parts) {
    const std::size_t m = p.cols();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) out(r, c0 + c) = p(r, c);
    c0 += m;
  }
  return out;
}

Tensor column_slice(const Tensor& t, std::size_t begin, std::size_t end) {
  if (begin >= end || end > t.cols()) throw ShapeError("column_slice out of range for " + shape_string(t.shape()));
  const std::size_t n = t.rows();
  Tensor out = Tensor::zeros(n, end - begin);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = t(r, c);
  return out;
}

Tensor tile_rows(const Tensor& row, std::size_t n) {
  if (row.rows() != 1) throw ShapeError("tile_rows expects a single row, got " + shape_string(row.shape()));
  Tensor out = Tensor::zeros(n, row.cols());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < row.cols(); ++c) out(r, c) = row[c];
  return out;
}

}  // namespace elue::ndiff
