#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geotr/encoder.hpp"
#include "geotr/loss.hpp"
#include "geotr/projection.hpp"

namespace geotr {

struct ModelConfig {
  int width = 224;
  int height = 28;
  int slots = 8;
  int classes = 10;
  int k1 = 3;
  int k2 = 1;
  std::string labels = "0123456789";  // class index -> display character
  EncoderConfig encoder;

  void validate() const {
    if (width <= 0 || height <= 0 || slots <= 0 || classes <= 0)
      throw DimensionError("model config: non-positive dimension");
    if (k1 <= 0 || k1 % 2 == 0 || k2 <= 0 || k2 % 2 == 0)
      throw DimensionError("model config: kernel sizes must be odd positive");
    if (static_cast<int>(labels.size()) != classes)
      throw DimensionError("model config: label table size != class count");
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j])
          throw DimensionError("model config: duplicate label character");
    if (encoder.image_height != height)
      throw DimensionError("model config: encoder height != image height");
    encoder.validate();
  }

  // Keeps the encoder-side copy of the image height in sync.
  void normalize() { encoder.image_height = height; }
};

// Parses/serializes the canonical JSON form (sorted keys, UTF-8).
ModelConfig model_config_from_json(const std::string& text);
std::string model_config_to_json(const ModelConfig& cfg);

template <class T>
struct ModelCache {
  EncoderCache<T> encoder;
  ProjectionCache<T> projection;
};

template <class T>
struct BasicModel {
  ModelConfig cfg;
  BasicEncoderParams<T> encoder;
  BasicProjectionParams<T> projection;

  BasicModel() = default;
  explicit BasicModel(ModelConfig c) : cfg(std::move(c)) {
    cfg.normalize();
    cfg.validate();
    encoder = BasicEncoderParams<T>(cfg.encoder);
    projection =
        BasicProjectionParams<T>(cfg.classes, cfg.encoder.latent_size(),
                                 cfg.k1, cfg.slots, cfg.width, cfg.k2);
  }

  void init(std::uint64_t seed) {
    Rng rng(seed);
    init_encoder(encoder, cfg.encoder, rng);
    init_projection(projection, rng);
  }

  // Visits every parameter tensor in fixed architecture order with a stable
  // name. Serialization, counting, and the optimizer all share this order.
  template <class Fn>
  void for_each_param(Fn&& fn) {
    auto lstm = [&](const std::string& prefix, BasicLstmParams<T>& p) {
      fn(prefix + ".wx", p.wx);
      fn(prefix + ".wh", p.wh);
      fn(prefix + ".b", p.b);
    };
    if (cfg.encoder.is_tcn()) {
      for (std::size_t i = 0; i < encoder.blocks.size(); ++i) {
        const std::string prefix = "encoder.block" + std::to_string(i);
        fn(prefix + ".w", encoder.blocks[i].w);
        fn(prefix + ".b", encoder.blocks[i].b);
        if (encoder.blocks[i].has_projection()) {
          fn(prefix + ".wr", encoder.blocks[i].wr);
          fn(prefix + ".br", encoder.blocks[i].br);
        }
      }
    } else {
      lstm("encoder.fwd", encoder.fwd);
      lstm("encoder.bwd", encoder.bwd);
      lstm("encoder.second", encoder.second);
    }
    fn("projection.class.w", projection.class_w);
    fn("projection.class.b", projection.class_b);
    fn("projection.slot.w", projection.slot_w);
    fn("projection.slot.b", projection.slot_b);
  }

  template <class Fn>
  void for_each_param(Fn&& fn) const {
    const_cast<BasicModel*>(this)->for_each_param(
        [&](const std::string& name, BasicTensor<T>& t) {
          fn(name, static_cast<const BasicTensor<T>&>(t));
        });
  }

  long long param_count() const {
    long long n = 0;
    for_each_param([&](const std::string&, const BasicTensor<T>& t) {
      n += static_cast<long long>(t.size());
    });
    return n;
  }

  BasicTensor<T> forward(const BasicTensor<T>& image,
                         ModelCache<T>* cache = nullptr) const {
    if (image.rank() != 2 || image.dim(0) != cfg.height ||
        image.dim(1) != cfg.width)
      throw DimensionError("model: image shape " + shape_str(image) +
                           " != configured " + std::to_string(cfg.height) +
                           "x" + std::to_string(cfg.width));
    BasicTensor<T> latent = encode_image(image, cfg.encoder, encoder,
                                         cache ? &cache->encoder : nullptr);
    return project(latent, projection, cache ? &cache->projection : nullptr);
  }

  // Parameter gradients accumulate into `grads`; image gradients, when
  // requested, accumulate into *grad_image (caller zero-initializes both).
  void backward(const ModelCache<T>& cache, const BasicTensor<T>& grad_probs,
                BasicModel<T>& grads,
                BasicTensor<T>* grad_image = nullptr) const {
    BasicTensor<T> grad_latent(cache.projection.latent.shape);
    project_backward(projection, cache.projection, grad_probs,
                     grads.projection, &grad_latent);
    encode_backward(cfg.encoder, encoder, cache.encoder, grad_latent,
                    grads.encoder, grad_image);
  }

  void zero_params() {
    for_each_param(
        [](const std::string&, BasicTensor<T>& t) { t.fill(T(0)); });
  }

  // Per slot: argmax class index and its probability, ties to the lowest
  // class index.
  std::pair<std::vector<int>, std::vector<T>> predict(
      const BasicTensor<T>& image) const {
    BasicTensor<T> probs = forward(image);
    std::vector<int> labels(cfg.slots);
    std::vector<T> conf(cfg.slots);
    for (int m = 0; m < cfg.slots; ++m) {
      const T* row = probs.row(m);
      int best = 0;
      for (int c = 1; c < cfg.classes; ++c)
        if (row[c] > row[best]) best = c;
      labels[m] = best;
      conf[m] = row[best];
    }
    return {std::move(labels), std::move(conf)};
  }

  std::string decode(const std::vector<int>& labels) const {
    std::string out;
    out.reserve(labels.size());
    for (int y : labels) {
      if (y < 0 || y >= cfg.classes)
        throw IndexError("decode: label out of range");
      out.push_back(cfg.labels[static_cast<std::size_t>(y)]);
    }
    return out;
  }

  // Gradient of the loss against every input pixel, for the attack path.
  BasicTensor<T> input_gradient(const BasicTensor<T>& image,
                                const std::vector<int>& target_labels) const {
    ModelCache<T> cache;
    BasicTensor<T> probs = forward(image, &cache);
    BasicTensor<T> grad_probs = cce_backward(probs, target_labels);
    BasicModel<T> scratch(cfg);
    BasicTensor<T> grad_image(image.shape);
    backward(cache, grad_probs, scratch, &grad_image);
    return grad_image;
  }
};

using Model = BasicModel<float>;

}  // namespace geotr
