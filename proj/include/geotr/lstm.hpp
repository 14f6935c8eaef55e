#pragma once

#include <utility>

#include "geotr/ops.hpp"
#include "geotr/rng.hpp"
#include "geotr/tensor.hpp"

namespace geotr {

// Gate blocks are packed in fixed order: input, forget, candidate, output.
template <class T>
struct BasicLstmParams {
  BasicTensor<T> wx;  // [4H x I]
  BasicTensor<T> wh;  // [4H x H]
  BasicTensor<T> b;   // [4H]
  int input = 0;
  int hidden = 0;

  BasicLstmParams() = default;
  BasicLstmParams(int input_size, int hidden_size)
      : wx({4 * hidden_size, input_size}),
        wh({4 * hidden_size, hidden_size}),
        b({4 * hidden_size}),
        input(input_size),
        hidden(hidden_size) {}

  void check(int expected_input) const {
    if (input <= 0 || hidden <= 0)
      throw DimensionError("lstm: non-positive dimensions");
    if (input != expected_input)
      throw DimensionError("lstm: input size mismatch");
    if (wx.dim(0) != 4 * hidden || wx.dim(1) != input ||
        wh.dim(0) != 4 * hidden || wh.dim(1) != hidden ||
        b.dim(0) != 4 * hidden)
      throw DimensionError("lstm: parameter shapes inconsistent");
  }
};

using LstmCellParams = BasicLstmParams<float>;

// Glorot-uniform weights, forget-gate bias block at 1, everything else 0.
template <class T>
void init_lstm(BasicLstmParams<T>& p, Rng& rng) {
  auto fill_uniform = [&](BasicTensor<T>& w, int fan_in, int fan_out) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (T& v : w.data) v = static_cast<T>(rng.uniform(-s, s));
  };
  fill_uniform(p.wx, p.input, 4 * p.hidden);
  fill_uniform(p.wh, p.hidden, 4 * p.hidden);
  p.b.fill(T(0));
  for (int j = 0; j < p.hidden; ++j) p.b.data[p.hidden + j] = T(1);
}

// One recurrence step on raw spans. gates_out, when given, receives the
// four post-activation gate blocks for the backward pass.
template <class T>
void lstm_step_raw(const T* x, const T* h_prev, const T* c_prev,
                   const BasicLstmParams<T>& p, T* h_out, T* c_out,
                   T* z_scratch, T* gates_out = nullptr) {
  const int h = p.hidden;
  matvec(p.wx, x, z_scratch);
  for (int r = 0; r < 4 * h; ++r) {
    const T* wrow = p.wh.row(r);
    T acc = z_scratch[r] + p.b.data[r];
    for (int c = 0; c < h; ++c) acc += wrow[c] * h_prev[c];
    z_scratch[r] = acc;
  }
  for (int j = 0; j < h; ++j) {
    const T gi = sigmoid(z_scratch[j]);
    const T gf = sigmoid(z_scratch[h + j]);
    const T gg = std::tanh(z_scratch[2 * h + j]);
    const T go = sigmoid(z_scratch[3 * h + j]);
    const T c = gf * c_prev[j] + gi * gg;
    c_out[j] = c;
    h_out[j] = go * std::tanh(c);
    if (gates_out) {
      gates_out[j] = gi;
      gates_out[h + j] = gf;
      gates_out[2 * h + j] = gg;
      gates_out[3 * h + j] = go;
    }
  }
}

// Spec-facing single step: (x, h, c) -> (h', c').
template <class T>
std::pair<BasicTensor<T>, BasicTensor<T>> lstm_step(
    const BasicTensor<T>& x, const BasicTensor<T>& h, const BasicTensor<T>& c,
    const BasicLstmParams<T>& p) {
  if (x.rank() != 1 || x.dim(0) != p.input)
    throw DimensionError("lstm_step: input size mismatch");
  if (h.rank() != 1 || h.dim(0) != p.hidden || c.rank() != 1 ||
      c.dim(0) != p.hidden)
    throw DimensionError("lstm_step: state size mismatch");
  p.check(p.input);
  BasicTensor<T> h_out({p.hidden}), c_out({p.hidden});
  std::vector<T> z(static_cast<std::size_t>(4) * p.hidden);
  lstm_step_raw(x.data.data(), h.data.data(), c.data.data(), p,
                h_out.data.data(), c_out.data.data(), z.data());
  ensure_finite(h_out, "lstm_step");
  ensure_finite(c_out, "lstm_step");
  return {std::move(h_out), std::move(c_out)};
}

template <class T>
struct LstmCache {
  BasicTensor<T> xt;      // [T x I]
  BasicTensor<T> gates;   // [T x 4H], post-activation
  BasicTensor<T> c;       // [T x H]
  BasicTensor<T> tanh_c;  // [T x H]
  BasicTensor<T> h;       // [T x H]
};

// Whole-sequence forward over time-major input [T x I], zero initial state.
// The input projection for every step is hoisted into one matmul; only the
// recurrent term runs inside the time loop.
template <class T>
BasicTensor<T> lstm_seq_forward(const BasicTensor<T>& xt,
                                const BasicLstmParams<T>& p,
                                LstmCache<T>* cache = nullptr) {
  if (xt.rank() != 2) throw DimensionError("lstm_seq: input must be rank 2");
  p.check(xt.dim(1));
  const int steps = xt.dim(0), h = p.hidden;

  BasicTensor<T> wxt = transpose(p.wx);  // [I x 4H]
  BasicTensor<T> zt({steps, 4 * h});
  matmul(xt, wxt, zt);

  BasicTensor<T> h_seq({steps, h});
  BasicTensor<T> c_seq({steps, h});
  if (cache) {
    cache->gates = BasicTensor<T>({steps, 4 * h});
    cache->tanh_c = BasicTensor<T>({steps, h});
  }

  std::vector<T> h_prev(h, T(0)), c_prev(h, T(0));
  for (int t = 0; t < steps; ++t) {
    T* z = zt.row(t);
    for (int r = 0; r < 4 * h; ++r) {
      const T* wrow = p.wh.row(r);
      T acc = z[r] + p.b.data[r];
      for (int c = 0; c < h; ++c) acc += wrow[c] * h_prev[c];
      z[r] = acc;
    }
    T* hrow = h_seq.row(t);
    T* crow = c_seq.row(t);
    T* grow = cache ? cache->gates.row(t) : nullptr;
    T* tcrow = cache ? cache->tanh_c.row(t) : nullptr;
    for (int j = 0; j < h; ++j) {
      const T gi = sigmoid(z[j]);
      const T gf = sigmoid(z[h + j]);
      const T gg = std::tanh(z[2 * h + j]);
      const T go = sigmoid(z[3 * h + j]);
      const T c = gf * c_prev[j] + gi * gg;
      const T tc = std::tanh(c);
      crow[j] = c;
      hrow[j] = go * tc;
      if (grow) {
        grow[j] = gi;
        grow[h + j] = gf;
        grow[2 * h + j] = gg;
        grow[3 * h + j] = go;
        tcrow[j] = tc;
      }
    }
    std::copy(hrow, hrow + h, h_prev.begin());
    std::copy(crow, crow + h, c_prev.begin());
  }
  ensure_finite(h_seq, "lstm_seq_forward");
  if (cache) {
    cache->xt = xt;
    cache->c = std::move(c_seq);
    cache->h = h_seq;
  }
  return h_seq;
}

// BPTT over the cached sequence. Parameter gradients accumulate into
// `grads`; input gradients are written only when grad_xt is non-null.
template <class T>
void lstm_seq_backward(const BasicLstmParams<T>& p, const LstmCache<T>& cache,
                       const BasicTensor<T>& grad_h_seq,
                       BasicLstmParams<T>& grads,
                       BasicTensor<T>* grad_xt = nullptr) {
  const int steps = cache.xt.dim(0), h = p.hidden;
  if (grad_h_seq.dim(0) != steps || grad_h_seq.dim(1) != h)
    throw DimensionError("lstm_seq_backward: grad shape mismatch");
  if (grad_xt && (grad_xt->dim(0) != steps || grad_xt->dim(1) != p.input))
    throw DimensionError("lstm_seq_backward: grad_xt shape mismatch");

  std::vector<T> dh(h, T(0)), dc(h, T(0)), dz(static_cast<std::size_t>(4) * h);
  for (int t = steps - 1; t >= 0; --t) {
    const T* g = cache.gates.row(t);
    const T* tc = cache.tanh_c.row(t);
    const T* c_prev = t > 0 ? cache.c.row(t - 1) : nullptr;
    const T* h_prev = t > 0 ? cache.h.row(t - 1) : nullptr;
    const T* up = grad_h_seq.row(t);

    for (int j = 0; j < h; ++j) {
      const T gi = g[j], gf = g[h + j], gg = g[2 * h + j], go = g[3 * h + j];
      const T dht = up[j] + dh[j];
      const T dct = dc[j] + dht * go * (T(1) - tc[j] * tc[j]);
      const T cp = c_prev ? c_prev[j] : T(0);
      dz[j] = dct * gg * gi * (T(1) - gi);
      dz[h + j] = dct * cp * gf * (T(1) - gf);
      dz[2 * h + j] = dct * gi * (T(1) - gg * gg);
      dz[3 * h + j] = dht * tc[j] * go * (T(1) - go);
      dc[j] = dct * gf;
    }

    for (int r = 0; r < 4 * h; ++r) grads.b.data[r] += dz[r];
    outer_accum(dz.data(), cache.xt.row(t), grads.wx);
    if (h_prev) outer_accum(dz.data(), h_prev, grads.wh);

    std::fill(dh.begin(), dh.end(), T(0));
    matvec_transposed_accum(p.wh, dz.data(), dh.data());
    if (grad_xt) matvec_transposed_accum(p.wx, dz.data(), grad_xt->row(t));
  }
  ensure_finite(grads.wx, "lstm_seq_backward");
  if (grad_xt) ensure_finite(*grad_xt, "lstm_seq_backward");
}

// Reverse the row order of a time-major sequence.
template <class T>
BasicTensor<T> reverse_rows(const BasicTensor<T>& xt) {
  BasicTensor<T> out(xt.shape);
  const int steps = xt.dim(0), width = xt.dim(1);
  for (int t = 0; t < steps; ++t)
    std::copy(xt.row(t), xt.row(t) + width, out.row(steps - 1 - t));
  return out;
}

template <class T>
struct BiLstmCache {
  LstmCache<T> fwd;
  LstmCache<T> bwd;  // over the reversed sequence
};

// Concatenation of a left-to-right pass and a right-to-left pass, both from
// zero state. Contract shapes: columns [I x T] in, [2H x T] out.
template <class T>
BasicTensor<T> bilstm_forward(const BasicTensor<T>& columns,
                              const BasicLstmParams<T>& p_fwd,
                              const BasicLstmParams<T>& p_bwd,
                              BiLstmCache<T>* cache = nullptr) {
  if (columns.rank() != 2) throw DimensionError("bilstm: rank 2 required");
  if (p_fwd.hidden != p_bwd.hidden)
    throw DimensionError("bilstm: direction widths differ");
  const int steps = columns.dim(1), h = p_fwd.hidden;

  BasicTensor<T> xt = transpose(columns);
  BasicTensor<T> hf =
      lstm_seq_forward(xt, p_fwd, cache ? &cache->fwd : nullptr);
  BasicTensor<T> xr = reverse_rows(xt);
  BasicTensor<T> hb_rev =
      lstm_seq_forward(xr, p_bwd, cache ? &cache->bwd : nullptr);

  BasicTensor<T> out({2 * h, steps});
  for (int t = 0; t < steps; ++t) {
    const T* f = hf.row(t);
    const T* b = hb_rev.row(steps - 1 - t);
    for (int j = 0; j < h; ++j) {
      out.at(j, t) = f[j];
      out.at(h + j, t) = b[j];
    }
  }
  return out;
}

}  // namespace geotr
