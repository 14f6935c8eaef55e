#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "geotr/error.hpp"

namespace geotr {

// Dense row-major array with shape metadata. Single precision (`Tensor`)
// is the production carrier; the double instantiation exists for the
// gradient-check test path.
template <class T>
struct BasicTensor {
  std::vector<int> shape;
  std::vector<T> data;

  BasicTensor() = default;

  explicit BasicTensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(element_count(shape), T(0));
  }

  BasicTensor(std::vector<int> s, std::vector<T> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != element_count(shape))
      throw DimensionError("tensor: data length does not match shape");
  }

  static std::size_t element_count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw DimensionError("tensor: non-positive extent");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }

  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  // Rank-2 accessors; row-major.
  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * dim(1) + c]; }
  T at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * dim(1) + c];
  }

  // Rank-3 accessors.
  T& at(int a, int b, int c) {
    return data[(static_cast<std::size_t>(a) * dim(1) + b) * dim(2) + c];
  }
  T at(int a, int b, int c) const {
    return data[(static_cast<std::size_t>(a) * dim(1) + b) * dim(2) + c];
  }

  T* row(int r) { return data.data() + static_cast<std::size_t>(r) * dim(1); }
  const T* row(int r) const {
    return data.data() + static_cast<std::size_t>(r) * dim(1);
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const BasicTensor& other) const {
    return shape == other.shape;
  }
};

using Tensor = BasicTensor<float>;
using DTensor = BasicTensor<double>;

template <class T>
bool all_finite(const BasicTensor<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

// NaN/Inf after a kernel is a hard error, never silent propagation.
template <class T>
void ensure_finite(const BasicTensor<T>& t, const char* where) {
  if (!all_finite(t))
    throw NumericError(std::string("non-finite value after ") + where);
}

template <class T>
std::string shape_str(const BasicTensor<T>& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

template <class U, class T>
BasicTensor<U> tensor_cast(const BasicTensor<T>& t) {
  BasicTensor<U> out(t.shape);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    out.data[i] = static_cast<U>(t.data[i]);
  return out;
}

}  // namespace geotr
