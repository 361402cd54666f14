#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace elue::ndiff {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Rank 0, 1 and 2 tensors can be viewed
/// as matrices: a rank-1 tensor of length n is a 1 x n row.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor row(std::vector<double> values);
  static Tensor scalar(double value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const double* data() const noexcept { return values_.data(); }
  double* data() noexcept { return values_.data(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }

  /// Value of a single-element tensor.
  double item() const;
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

  std::vector<double> to_vector() const { return values_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

// Plain matrix helpers for untaped code paths.
/// Side-by-side concatenation; all parts need the same row count.
Tensor hcat(std::initializer_list<std::reference_wrapper<const Tensor>> parts);
Tensor column_slice(const Tensor& t, std::size_t begin, std::size_t end);
/// n copies of a 1 x m row.
Tensor tile_rows(const Tensor& row, std::size_t n);

}  // namespace elue::ndiff
