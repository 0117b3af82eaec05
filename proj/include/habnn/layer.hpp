#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace habnn {

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Mean-field Student's t posterior over one layer's weights.
///
/// Both matrices are fan_out x (fan_in + 1); the trailing column holds the
/// bias, which multiplies a constant 1 input.
struct LayerState {
  Matrix w_mu;
  Matrix w_tau2;
  double nu_w = 12.0;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;

  LayerState() = default;
  LayerState(std::size_t fan_in, std::size_t fan_out, double nu, double tau2);

  std::size_t weight_count() const { return w_mu.size(); }
  /// Throws std::invalid_argument on inconsistent shapes and
  /// std::domain_error on non-positive scales or nu <= 2.
  void validate() const;

  bool operator==(const LayerState&) const = default;
};

}  // namespace habnn
