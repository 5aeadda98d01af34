#include "tearing/numeric/tensor.hpp"

#include <cmath>
#include <sstream>

namespace tearing {

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

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

template <typename T>
Tensor<T>::Tensor(Shape shape) : shape_(std::move(shape)), values_(shape_numel(shape_), T(0)) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, AlignedVector<T> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_numel(shape_) != values_.size()) {
    throw ShapeError("tensor of shape " + shape_str(shape_) + " cannot hold " +
                     std::to_string(values_.size()) + " values");
  }
}

template <typename T>
Tensor<T> Tensor<T>::filled(Shape shape, T v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  if (shape_.size() == 2) return shape_[0];
  if (shape_.size() <= 1) return 1;
  throw ShapeError("matrix view of rank-" + std::to_string(shape_.size()) + " tensor " +
                   shape_str(shape_));
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  if (shape_.empty()) return 1;
  throw ShapeError("matrix view of rank-" + std::to_string(shape_.size()) + " tensor " +
                   shape_str(shape_));
}

template <typename T>
T Tensor<T>::item() const {
  if (values_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  }
  return values_[0];
}

template <typename T>
void Tensor<T>::fill(T v) {
  for (auto& x : values_) x = v;
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (auto x : values_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace tearing
