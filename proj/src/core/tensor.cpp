#include "tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "error.hpp"

namespace slc {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
void validate_shape(const Shape& shape) {
  for (auto d : shape)
    require(d > 0, ErrorCode::Shape, "tensor dims must be positive, got " + shape_str(shape));
}
}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  require(shape_numel(shape_) == data_.size(), ErrorCode::Shape,
          "tensor " + shape_str(shape_) + " needs " + std::to_string(shape_numel(shape_)) +
              " values, got " + std::to_string(data_.size()));
}

Tensor Tensor::from(std::initializer_list<float> values) {
  return Tensor({values.size()}, std::vector<float>(values));
}

float& Tensor::at(std::size_t c, std::size_t y, std::size_t x) {
  return data_[(c * shape_[1] + y) * shape_[2] + x];
}

float Tensor::at(std::size_t c, std::size_t y, std::size_t x) const {
  return data_[(c * shape_[1] + y) * shape_[2] + x];
}

std::span<float> Tensor::grad() {
  if (grad_.empty()) grad_.assign(data_.size(), 0.0f);
  return grad_;
}

void Tensor::zero_grad() {
  if (grad_.empty())
    grad_.assign(data_.size(), 0.0f);
  else
    std::fill(grad_.begin(), grad_.end(), 0.0f);
}

Tensor Tensor::reshaped(Shape shape) const {
  require(shape_numel(shape) == data_.size(), ErrorCode::Shape,
          "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void check_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected)
    fail(ErrorCode::Shape, std::string(what) + ": expected " + shape_str(expected) + ", got " +
                               shape_str(t.shape()));
}

bool bit_identical(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return a.empty() || std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(float)) == 0;
}

}  // namespace slc
