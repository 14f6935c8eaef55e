#pragma once

#include "geotr/ops.hpp"
#include "geotr/rng.hpp"
#include "geotr/tensor.hpp"

namespace geotr {

// Dual-conv head: a class conv over latent features, a transpose, then a
// slot conv whose input channels are the fixed sequence length T. Class
// scores exist before slots are carved out, which is what makes the slot
// conv a spatial weighting and not a classifier.
template <class T>
struct BasicProjectionParams {
  BasicTensor<T> class_w;  // [N x F x k1]
  BasicTensor<T> class_b;  // [N]
  BasicTensor<T> slot_w;   // [M x T x k2]
  BasicTensor<T> slot_b;   // [M]

  BasicProjectionParams() = default;
  BasicProjectionParams(int classes, int features, int k1, int slots,
                        int width, int k2)
      : class_w({classes, features, k1}),
        class_b({classes}),
        slot_w({slots, width, k2}),
        slot_b({slots}) {}

  int classes() const { return class_w.dim(0); }
  int features() const { return class_w.dim(1); }
  int width() const { return slot_w.dim(1); }
  int slots() const { return slot_w.dim(0); }
};

using ProjectionParams = BasicProjectionParams<float>;

template <class T>
void init_projection(BasicProjectionParams<T>& p, Rng& rng) {
  auto fill = [&](BasicTensor<T>& w) {
    const int fan_in = w.dim(1) * w.dim(2);
    const int fan_out = w.dim(0) * w.dim(2);
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (T& v : w.data) v = static_cast<T>(rng.uniform(-s, s));
  };
  fill(p.class_w);
  p.class_b.fill(T(0));
  fill(p.slot_w);
  p.slot_b.fill(T(0));
}

template <class T>
struct ProjectionCache {
  BasicTensor<T> latent;      // [F x T]
  BasicTensor<T> class_out;   // [N x T]
  BasicTensor<T> transposed;  // [T x N]
  BasicTensor<T> logits;      // [M x N], pre-softmax
  BasicTensor<T> probs;       // [M x N]
};

// [F x T] latent -> [M x N] row-stochastic slot-class matrix.
template <class T>
BasicTensor<T> project(const BasicTensor<T>& latent,
                       const BasicProjectionParams<T>& p,
                       ProjectionCache<T>* cache = nullptr) {
  if (latent.rank() != 2 || latent.dim(0) != p.features())
    throw DimensionError("project: latent feature size mismatch");
  if (latent.dim(1) != p.width())
    throw DimensionError("project: latent width " +
                         std::to_string(latent.dim(1)) +
                         " != configured " + std::to_string(p.width()));
  ensure_finite(latent, "project input");

  BasicTensor<T> class_out = conv1d_forward(latent, p.class_w, p.class_b);
  BasicTensor<T> transposed = transpose(class_out);
  BasicTensor<T> logits = conv1d_forward(transposed, p.slot_w, p.slot_b);
  BasicTensor<T> probs = softmax_rows(logits);
  if (cache) {
    cache->latent = latent;
    cache->class_out = std::move(class_out);
    cache->transposed = std::move(transposed);
    cache->logits = std::move(logits);
    cache->probs = probs;
  }
  return probs;
}

// Parameter gradients accumulate into `grads`; the latent gradient, when
// requested, is accumulated into *grad_latent (caller zero-initializes).
template <class T>
void project_backward(const BasicProjectionParams<T>& p,
                      const ProjectionCache<T>& cache,
                      const BasicTensor<T>& grad_out,
                      BasicProjectionParams<T>& grads,
                      BasicTensor<T>* grad_latent = nullptr) {
  if (!grad_out.same_shape(cache.probs))
    throw DimensionError("project_backward: grad shape mismatch");
  BasicTensor<T> dlogits = softmax_rows_backward(cache.probs, grad_out);
  BasicTensor<T> dtrans(cache.transposed.shape);
  conv1d_backward(cache.transposed, p.slot_w, dlogits, 1, &dtrans,
                  grads.slot_w, grads.slot_b);
  BasicTensor<T> dclass = transpose(dtrans);
  conv1d_backward(cache.latent, p.class_w, dclass, 1, grad_latent,
                  grads.class_w, grads.class_b);
}

}  // namespace geotr
