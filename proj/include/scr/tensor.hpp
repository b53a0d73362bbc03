#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scr {

// Dense row-major array of doubles. Shape dims are positive; product(shape)
// always equals data size.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

  Tensor(std::vector<int> shape, std::vector<double> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_numel(shape_) != data_.size()) {
      throw std::invalid_argument("Tensor: shape/value size mismatch");
    }
  }

  static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool is_scalar() const { return data_.size() == 1; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D accessors (row-major).
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * dim(1) + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * dim(1) + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double item() const {
    if (!is_scalar()) throw std::logic_error("Tensor::item on non-scalar");
    return data_[0];
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) os << 'x';
      os << shape_[i];
    }
    os << ']';
    return os.str();
  }

 private:
  static std::size_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty()) throw std::invalid_argument("Tensor: empty shape");
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace scr
