#include "dermabench/tensor.hpp"

#include <algorithm>

namespace dermabench {

int64_t shape_numel(std::span<const int64_t> shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ContractError("tensor: negative dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0f);
}

Tensor::Tensor(std::vector<int64_t> shape, float fill_value) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_numel(shape_)), fill_value);
}

void Tensor::reshape(std::vector<int64_t> shape) {
  if (shape_numel(shape) != numel())
    throw ContractError("tensor: reshape changes element count");
  shape_ = std::move(shape);
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace dermabench
