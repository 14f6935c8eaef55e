#pragma once

#include <cmath>
#include <vector>

#include "geotr/error.hpp"
#include "geotr/tensor.hpp"

namespace geotr {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-7f;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long long step = 0;

  void reset(const std::vector<Tensor*>& params) {
    m.clear();
    v.clear();
    for (const Tensor* p : params) {
      m.emplace_back(p->shape);
      v.emplace_back(p->shape);
    }
    step = 0;
  }
};

// Standard Adam with bias correction, applied across the flattened
// parameter list in order.
inline void adam_step(const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads, AdamState& st,
                      const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw DimensionError("adam_step: parameter/state count mismatch");
  st.step += 1;
  const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), st.step);
  const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), st.step);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    if (!p.same_shape(g) || !p.same_shape(st.m[k]))
      throw DimensionError("adam_step: shape mismatch at parameter " +
                           std::to_string(k));
    float* pd = p.data.data();
    const float* gd = g.data.data();
    float* md = st.m[k].data.data();
    float* vd = st.v[k].data.data();
    const std::size_t n = p.data.size();
    for (std::size_t i = 0; i < n; ++i) {
      md[i] = cfg.beta1 * md[i] + (1.0f - cfg.beta1) * gd[i];
      vd[i] = cfg.beta2 * vd[i] + (1.0f - cfg.beta2) * gd[i] * gd[i];
      const double mhat = md[i] / bc1;
      const double vhat = vd[i] / bc2;
      pd[i] -= static_cast<float>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

inline double l2_norm(const std::vector<const Tensor*>& grads) {
  double acc = 0.0;
  for (const Tensor* g : grads)
    for (float v : g->data) acc += static_cast<double>(v) * v;
  return std::sqrt(acc);
}

// Sharpness-aware step: climb to w + ρ·g/‖g‖, re-evaluate the gradient
// there, return to w, and feed the perturbed gradient to Adam. `recompute`
// must overwrite the grad tensors for the current parameter values. A zero
// gradient norm (or ρ = 0) degenerates to a plain Adam step.
template <class RecomputeFn>
void sam_step(const std::vector<Tensor*>& params,
              const std::vector<const Tensor*>& grads, AdamState& st,
              const AdamConfig& cfg, float rho, RecomputeFn&& recompute) {
  const double norm = l2_norm(grads);
  if (rho > 0.0f && norm > 0.0) {
    const double scale = rho / (norm + 1e-12);
    std::vector<std::vector<float>> saved;
    saved.reserve(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      saved.push_back(params[k]->data);
      float* pd = params[k]->data.data();
      const float* gd = grads[k]->data.data();
      for (std::size_t i = 0; i < params[k]->data.size(); ++i)
        pd[i] += static_cast<float>(scale * gd[i]);
    }
    recompute();
    for (std::size_t k = 0; k < params.size(); ++k)
      params[k]->data = std::move(saved[k]);
  }
  adam_step(params, grads, st, cfg);
}

}  // namespace geotr
