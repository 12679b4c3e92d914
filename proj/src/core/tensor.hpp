#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace slc {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major f32 array. The gradient buffer is optional and, when
/// allocated, always has the same shape as the values.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor from(std::initializer_list<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float* ptr() noexcept { return data_.data(); }
  const float* ptr() const noexcept { return data_.data(); }
  std::vector<float>& storage() noexcept { return data_; }
  const std::vector<float>& storage() const noexcept { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(std::size_t c, std::size_t y, std::size_t x);
  float at(std::size_t c, std::size_t y, std::size_t x) const;

  bool has_grad() const noexcept { return !grad_.empty(); }
  /// Allocates a zeroed gradient buffer if none exists.
  std::span<float> grad();
  std::span<const float> grad() const noexcept { return grad_; }
  void zero_grad();
  void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

  /// Same data, new shape of equal element count.
  Tensor reshaped(Shape shape) const;

  void fill(float v);
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<float> data_;
  std::vector<float> grad_;
};

/// Throws a Shape error naming both shapes when they differ.
void check_shape(const Tensor& t, const Shape& expected, const char* what);

/// True when every element compares equal bit for bit.
bool bit_identical(const Tensor& a, const Tensor& b);

}  // namespace slc
