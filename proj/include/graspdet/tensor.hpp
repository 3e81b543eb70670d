#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "graspdet/errors.hpp"

namespace graspdet {

// Dense double-precision n-d array, row-major. Small and value-semantic;
// the training graphs at this scale never need views or broadcasting.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(numel(shape_), 0.0);
  }
  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel(shape_)) {
      throw ShapeMismatch("tensor data does not match its shape");
    }
  }

  static std::size_t numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (const int d : shape) {
      if (d < 0) throw ShapeMismatch("negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 4-D element access used by the kernels
  double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * dim(1) + j]; }
  double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * dim(1) + j]; }
  double& at(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + y) * dim(3) + x];
  }
  double at(int n, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + y) * dim(3) + x];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace graspdet
