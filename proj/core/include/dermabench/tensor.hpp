#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dermabench/errors.hpp"

namespace dermabench {

/// Dense row-major float tensor. Image batches use NHWC layout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::vector<int64_t> shape, float fill_value);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> flat() { return {data_.data(), data_.size()}; }
  std::span<const float> flat() const { return {data_.data(), data_.size()}; }

  float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  /// In-place reshape; element count must be preserved.
  void reshape(std::vector<int64_t> shape);

  void fill(float v);
  void zero() { fill(0.0f); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  std::vector<int64_t> shape_;
  std::vector<float> data_;
};

int64_t shape_numel(std::span<const int64_t> shape);

}  // namespace dermabench
