#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tearing {

using Shape = std::vector<std::size_t>;

/// 64-byte aligned allocation so vectorized kernels see the same alignment
/// (and therefore the same summation order) on every run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Thrown when operand shapes do not conform; the message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major tensor. Rank 0 is a scalar holding one value.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, AlignedVector<T> values);
  Tensor(Shape shape, const std::vector<T>& values)
      : Tensor(std::move(shape), AlignedVector<T>(values.begin(), values.end())) {}
  Tensor(Shape shape, std::initializer_list<T> values)
      : Tensor(std::move(shape), AlignedVector<T>(values)) {}

  static Tensor scalar(T v) { return Tensor(Shape{}, AlignedVector<T>{v}); }
  static Tensor filled(Shape shape, T v);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // Matrix view: rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  AlignedVector<T>& storage() { return values_; }
  const AlignedVector<T>& storage() const { return values_; }
  std::vector<T> to_vector() const { return std::vector<T>(values_.begin(), values_.end()); }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  T item() const;
  void fill(T v);
  bool all_finite() const;

  template <typename U>
  Tensor<U> cast() const {
    AlignedVector<U> out(values_.begin(), values_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Shape shape_;
  AlignedVector<T> values_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace tearing
