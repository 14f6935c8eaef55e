#pragma once

#include <vector>

#include "geotr/error.hpp"
#include "geotr/tensor.hpp"

namespace geotr {

inline constexpr double kProbFloor = 1e-12;

// Cross-entropy summed over the M slot rows and scaled by 1/N, with N the
// class count. The 1/N factor is unusual but deliberate; it only rescales
// the effective learning rate.
template <class T>
double cce_loss(const BasicTensor<T>& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2) throw DimensionError("cce_loss: probs must be rank 2");
  const int slots = probs.dim(0), classes = probs.dim(1);
  if (static_cast<int>(labels.size()) != slots)
    throw DimensionError("cce_loss: label count mismatch");
  double sum = 0.0;
  for (int m = 0; m < slots; ++m) {
    const int y = labels[m];
    if (y < 0 || y >= classes) throw IndexError("cce_loss: label out of range");
    const double p = std::max(static_cast<double>(probs.at(m, y)), kProbFloor);
    sum -= std::log(p);
  }
  return sum / classes;
}

// Gradient with respect to the probability matrix. The floor clamp has zero
// slope below kProbFloor.
template <class T>
BasicTensor<T> cce_backward(const BasicTensor<T>& probs,
                            const std::vector<int>& labels) {
  const int slots = probs.dim(0), classes = probs.dim(1);
  if (static_cast<int>(labels.size()) != slots)
    throw DimensionError("cce_backward: label count mismatch");
  BasicTensor<T> grad(probs.shape);
  for (int m = 0; m < slots; ++m) {
    const int y = labels[m];
    if (y < 0 || y >= classes)
      throw IndexError("cce_backward: label out of range");
    const double p = static_cast<double>(probs.at(m, y));
    if (p >= kProbFloor)
      grad.at(m, y) = static_cast<T>(-1.0 / (p * classes));
  }
  return grad;
}

}  // namespace geotr
