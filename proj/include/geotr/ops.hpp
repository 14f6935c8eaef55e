#pragma once

#include <algorithm>
#include <cmath>

#include "geotr/tensor.hpp"

namespace geotr {

// ---------------------------------------------------------------------------
// Dense helpers. Inner loops always run over contiguous memory so the
// compiler can vectorize them.
// ---------------------------------------------------------------------------

// C[M x N] = A[M x K] * B[K x N]
template <class T>
void matmul(const BasicTensor<T>& a, const BasicTensor<T>& b,
            BasicTensor<T>& c) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k || c.dim(0) != m || c.dim(1) != n)
    throw DimensionError("matmul: shape mismatch");
  c.fill(T(0));
  for (int i = 0; i < m; ++i) {
    T* crow = c.row(i);
    const T* arow = a.row(i);
    for (int kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = b.row(kk);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// y[R] = W[R x C] * x[C]   (rows are contiguous dot products)
template <class T>
void matvec(const BasicTensor<T>& w, const T* x, T* y) {
  const int rows = w.dim(0), cols = w.dim(1);
  for (int r = 0; r < rows; ++r) {
    const T* wrow = w.row(r);
    T acc = T(0);
    for (int c = 0; c < cols; ++c) acc += wrow[c] * x[c];
    y[r] = acc;
  }
}

// x[C] += W^T[C x R] * dy[R], expressed as row-wise axpy over W.
template <class T>
void matvec_transposed_accum(const BasicTensor<T>& w, const T* dy, T* dx) {
  const int rows = w.dim(0), cols = w.dim(1);
  for (int r = 0; r < rows; ++r) {
    const T g = dy[r];
    if (g == T(0)) continue;
    const T* wrow = w.row(r);
    for (int c = 0; c < cols; ++c) dx[c] += g * wrow[c];
  }
}

// W[R x C] += dy[R] (outer) x[C]
template <class T>
void outer_accum(const T* dy, const T* x, BasicTensor<T>& w) {
  const int rows = w.dim(0), cols = w.dim(1);
  for (int r = 0; r < rows; ++r) {
    const T g = dy[r];
    if (g == T(0)) continue;
    T* wrow = w.row(r);
    for (int c = 0; c < cols; ++c) wrow[c] += g * x[c];
  }
}

// ---------------------------------------------------------------------------
// conv1d: channels-first [C x L], stride 1, odd kernel, zero "same" padding.
// `dilation` > 1 spaces the taps; padding grows to keep the length contract.
// ---------------------------------------------------------------------------

struct Conv1dCache {
  // Forward inputs are cheap to keep relative to the layer activations.
  int c_in = 0, c_out = 0, k = 0, length = 0, dilation = 1;
};

template <class T>
void conv1d_check(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                  const BasicTensor<T>& bias, int dilation) {
  if (input.rank() != 2) throw DimensionError("conv1d: input must be rank 2");
  if (weights.rank() != 3)
    throw DimensionError("conv1d: weights must be rank 3");
  if (weights.dim(1) != input.dim(0))
    throw DimensionError("conv1d: weights C_in " +
                         std::to_string(weights.dim(1)) +
                         " does not match input C_in " +
                         std::to_string(input.dim(0)));
  if (weights.dim(2) % 2 == 0)
    throw DimensionError("conv1d: kernel width must be odd");
  if (bias.rank() != 1 || bias.dim(0) != weights.dim(0))
    throw DimensionError("conv1d: bias length must equal C_out");
  if (dilation < 1) throw DimensionError("conv1d: dilation must be positive");
}

template <class T>
BasicTensor<T> conv1d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, int dilation = 1,
                              Conv1dCache* cache = nullptr) {
  conv1d_check(input, weights, bias, dilation);
  const int c_in = input.dim(0), length = input.dim(1);
  const int c_out = weights.dim(0), k = weights.dim(2);
  const int half = k / 2;

  BasicTensor<T> out({c_out, length});
  for (int co = 0; co < c_out; ++co) {
    T* orow = out.row(co);
    std::fill(orow, orow + length, bias.data[co]);
    for (int ci = 0; ci < c_in; ++ci) {
      const T* irow = input.row(ci);
      for (int j = 0; j < k; ++j) {
        const T w = weights.at(co, ci, j);
        if (w == T(0)) continue;
        const int shift = (j - half) * dilation;
        const int t0 = std::max(0, -shift);
        const int t1 = std::min(length, length - shift);
        for (int t = t0; t < t1; ++t) orow[t] += w * irow[t + shift];
      }
    }
  }
  ensure_finite(out, "conv1d_forward");
  if (cache) *cache = {c_in, c_out, k, length, dilation};
  return out;
}

struct Conv1dGrads {
  // grad_input is filled only when requested (the first layer of a stack
  // does not need it unless input gradients are wanted).
};

template <class T>
void conv1d_backward(const BasicTensor<T>& input,
                     const BasicTensor<T>& weights,
                     const BasicTensor<T>& grad_out, int dilation,
                     BasicTensor<T>* grad_input, BasicTensor<T>& grad_weights,
                     BasicTensor<T>& grad_bias) {
  if (grad_out.rank() != 2 || grad_out.dim(0) != weights.dim(0) ||
      grad_out.dim(1) != input.dim(1))
    throw DimensionError("conv1d_backward: grad_out shape mismatch");
  if (!grad_weights.same_shape(weights))
    throw DimensionError("conv1d_backward: grad_weights shape mismatch");
  const int c_in = input.dim(0), length = input.dim(1);
  const int c_out = weights.dim(0), k = weights.dim(2);
  const int half = k / 2;

  for (int co = 0; co < c_out; ++co) {
    const T* grow = grad_out.row(co);
    T acc = T(0);
    for (int t = 0; t < length; ++t) acc += grow[t];
    grad_bias.data[co] += acc;

    for (int ci = 0; ci < c_in; ++ci) {
      const T* irow = input.row(ci);
      for (int j = 0; j < k; ++j) {
        const int shift = (j - half) * dilation;
        const int t0 = std::max(0, -shift);
        const int t1 = std::min(length, length - shift);
        T wacc = T(0);
        for (int t = t0; t < t1; ++t) wacc += grow[t] * irow[t + shift];
        grad_weights.at(co, ci, j) += wacc;

        if (grad_input) {
          const T w = weights.at(co, ci, j);
          if (w == T(0)) continue;
          T* dirow = grad_input->row(ci);
          for (int t = t0; t < t1; ++t) dirow[t + shift] += w * grow[t];
        }
      }
    }
  }
  ensure_finite(grad_weights, "conv1d_backward");
  if (grad_input) ensure_finite(*grad_input, "conv1d_backward");
}

// ---------------------------------------------------------------------------
// Row softmax with per-row max subtraction.
// ---------------------------------------------------------------------------

template <class T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& logits) {
  if (logits.rank() != 2) throw DimensionError("softmax_rows: rank 2 required");
  const int rows = logits.dim(0), cols = logits.dim(1);
  BasicTensor<T> out(logits.shape);
  for (int r = 0; r < rows; ++r) {
    const T* in = logits.row(r);
    T* o = out.row(r);
    T mx = in[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    T sum = T(0);
    for (int c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - mx);
      sum += o[c];
    }
    const T inv = T(1) / sum;
    for (int c = 0; c < cols; ++c) o[c] *= inv;
  }
  ensure_finite(out, "softmax_rows");
  return out;
}

// dL/dlogits given dL/dprobs and the forward output.
template <class T>
BasicTensor<T> softmax_rows_backward(const BasicTensor<T>& probs,
                                     const BasicTensor<T>& grad_probs) {
  if (!probs.same_shape(grad_probs))
    throw DimensionError("softmax_rows_backward: shape mismatch");
  const int rows = probs.dim(0), cols = probs.dim(1);
  BasicTensor<T> out(probs.shape);
  for (int r = 0; r < rows; ++r) {
    const T* p = probs.row(r);
    const T* g = grad_probs.row(r);
    T* o = out.row(r);
    T dot = T(0);
    for (int c = 0; c < cols; ++c) dot += g[c] * p[c];
    for (int c = 0; c < cols; ++c) o[c] = p[c] * (g[c] - dot);
  }
  ensure_finite(out, "softmax_rows_backward");
  return out;
}

// ---------------------------------------------------------------------------
// Rank-2 transpose.
// ---------------------------------------------------------------------------

template <class T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  if (a.rank() != 2) throw DimensionError("transpose: rank 2 required");
  const int rows = a.dim(0), cols = a.dim(1);
  BasicTensor<T> out({cols, rows});
  for (int r = 0; r < rows; ++r) {
    const T* arow = a.row(r);
    for (int c = 0; c < cols; ++c) out.at(c, r) = arow[c];
  }
  return out;
}

template <class T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace geotr
