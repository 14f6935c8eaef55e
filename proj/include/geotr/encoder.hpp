#pragma once

#include <string>
#include <vector>

#include "geotr/lstm.hpp"
#include "geotr/tcn.hpp"

namespace geotr {

struct TcnLevelSpec {
  int channels = 0;
  int dilation = 1;
};

struct EncoderConfig {
  std::string kind = "bilstm";  // "bilstm" | "tcn"
  int image_height = 28;
  int hidden_per_dir = 24;
  int second_width = 48;
  int tcn_kernel = 3;
  std::vector<TcnLevelSpec> tcn_levels{{32, 1}, {48, 2}, {48, 4}};

  bool is_tcn() const { return kind == "tcn"; }

  int latent_size() const {
    return is_tcn() ? tcn_levels.back().channels : second_width;
  }

  void validate() const {
    if (kind != "bilstm" && kind != "tcn")
      throw DimensionError("encoder: unknown kind '" + kind + "'");
    if (image_height <= 0) throw DimensionError("encoder: image height <= 0");
    if (is_tcn()) {
      if (tcn_levels.empty()) throw DimensionError("encoder: empty tcn schedule");
      if (tcn_kernel <= 0 || tcn_kernel % 2 == 0)
        throw DimensionError("encoder: tcn kernel must be odd and positive");
      for (const auto& lvl : tcn_levels)
        if (lvl.channels <= 0 || lvl.dilation <= 0)
          throw DimensionError("encoder: bad tcn level");
    } else {
      if (hidden_per_dir <= 0 || second_width <= 0)
        throw DimensionError("encoder: recurrent widths must be positive");
    }
  }
};

template <class T>
struct BasicEncoderParams {
  BasicLstmParams<T> fwd;
  BasicLstmParams<T> bwd;
  BasicLstmParams<T> second;
  std::vector<BasicTcnBlock<T>> blocks;

  BasicEncoderParams() = default;
  explicit BasicEncoderParams(const EncoderConfig& cfg) {
    cfg.validate();
    if (cfg.is_tcn()) {
      int c_in = cfg.image_height;
      for (const auto& lvl : cfg.tcn_levels) {
        blocks.emplace_back(c_in, lvl.channels, cfg.tcn_kernel, lvl.dilation);
        c_in = lvl.channels;
      }
    } else {
      fwd = BasicLstmParams<T>(cfg.image_height, cfg.hidden_per_dir);
      bwd = BasicLstmParams<T>(cfg.image_height, cfg.hidden_per_dir);
      second = BasicLstmParams<T>(2 * cfg.hidden_per_dir, cfg.second_width);
    }
  }
};

using EncoderParams = BasicEncoderParams<float>;

template <class T>
void init_encoder(BasicEncoderParams<T>& p, const EncoderConfig& cfg,
                  Rng& rng) {
  if (cfg.is_tcn()) {
    for (auto& blk : p.blocks) init_tcn_block(blk, rng);
  } else {
    init_lstm(p.fwd, rng);
    init_lstm(p.bwd, rng);
    init_lstm(p.second, rng);
  }
}

template <class T>
struct EncoderCache {
  LstmCache<T> fwd;
  LstmCache<T> bwd;  // over the reversed column sequence
  LstmCache<T> second;
  TcnCache<T> tcn;
};

// Time-major column matrix [T x I]; element i of a column is the pixel row
// counted from the bottom of the image.
template <class T>
BasicTensor<T> image_columns(const BasicTensor<T>& image) {
  if (image.rank() != 2) throw DimensionError("encoder: image must be rank 2");
  const int h = image.dim(0), w = image.dim(1);
  BasicTensor<T> xt({w, h});
  for (int t = 0; t < w; ++t) {
    T* row = xt.row(t);
    for (int i = 0; i < h; ++i) row[i] = image.at(h - 1 - i, t);
  }
  return xt;
}

// [H_img x W] image -> [F x T] latent, T = W.
template <class T>
BasicTensor<T> encode_image(const BasicTensor<T>& image,
                            const EncoderConfig& cfg,
                            const BasicEncoderParams<T>& p,
                            EncoderCache<T>* cache = nullptr) {
  cfg.validate();
  if (image.rank() != 2 || image.dim(0) != cfg.image_height)
    throw DimensionError("encoder: image height mismatch");
  const int steps = image.dim(1), h = cfg.hidden_per_dir;
  if (steps < 1) throw DimensionError("encoder: empty image");

  BasicTensor<T> xt = image_columns(image);
  if (cfg.is_tcn()) {
    BasicTensor<T> columns = transpose(xt);
    return tcn_forward(columns, p.blocks, cache ? &cache->tcn : nullptr);
  }

  BasicTensor<T> hf = lstm_seq_forward(xt, p.fwd, cache ? &cache->fwd : nullptr);
  BasicTensor<T> hb_rev =
      lstm_seq_forward(reverse_rows(xt), p.bwd, cache ? &cache->bwd : nullptr);

  BasicTensor<T> concat({steps, 2 * h});
  for (int t = 0; t < steps; ++t) {
    T* row = concat.row(t);
    std::copy(hf.row(t), hf.row(t) + h, row);
    const T* b = hb_rev.row(steps - 1 - t);
    std::copy(b, b + h, row + h);
  }
  BasicTensor<T> h2 =
      lstm_seq_forward(concat, p.second, cache ? &cache->second : nullptr);
  return transpose(h2);
}

// Accumulates parameter gradients into `grads`; image gradients, when
// requested, are accumulated into *grad_image (caller zero-initializes).
template <class T>
void encode_backward(const EncoderConfig& cfg, const BasicEncoderParams<T>& p,
                     const EncoderCache<T>& cache,
                     const BasicTensor<T>& grad_latent,
                     BasicEncoderParams<T>& grads,
                     BasicTensor<T>* grad_image = nullptr) {
  const int f = cfg.latent_size();
  if (grad_latent.rank() != 2 || grad_latent.dim(0) != f)
    throw DimensionError("encoder backward: latent grad shape mismatch");
  const int steps = grad_latent.dim(1);
  const int img_h = cfg.image_height;

  BasicTensor<T> dcols({img_h, steps});
  BasicTensor<T>* dcols_sink = grad_image ? &dcols : nullptr;

  if (cfg.is_tcn()) {
    tcn_backward(p.blocks, cache.tcn, grad_latent, grads.blocks, dcols_sink);
  } else {
    const int h = cfg.hidden_per_dir;
    BasicTensor<T> dh2 = transpose(grad_latent);  // [T x F]
    BasicTensor<T> dconcat({steps, 2 * h});
    lstm_seq_backward(p.second, cache.second, dh2, grads.second, &dconcat);

    BasicTensor<T> dhf({steps, h}), dhb_rev({steps, h});
    for (int t = 0; t < steps; ++t) {
      const T* row = dconcat.row(t);
      std::copy(row, row + h, dhf.row(t));
      std::copy(row + h, row + 2 * h, dhb_rev.row(steps - 1 - t));
    }

    BasicTensor<T> dxt({steps, img_h}), dxr({steps, img_h});
    lstm_seq_backward(p.fwd, cache.fwd, dhf, grads.fwd,
                      grad_image ? &dxt : nullptr);
    lstm_seq_backward(p.bwd, cache.bwd, dhb_rev, grads.bwd,
                      grad_image ? &dxr : nullptr);
    if (grad_image) {
      for (int t = 0; t < steps; ++t) {
        const T* r = dxr.row(steps - 1 - t);
        T* d = dxt.row(t);
        for (int i = 0; i < img_h; ++i) d[i] += r[i];
      }
      // dcols(i, t) indexes bottom-to-top, matching image_columns.
      for (int t = 0; t < steps; ++t)
        for (int i = 0; i < img_h; ++i) dcols.at(i, t) = dxt.at(t, i);
    }
  }

  if (grad_image) {
    if (grad_image->dim(0) != img_h || grad_image->dim(1) != steps)
      throw DimensionError("encoder backward: image grad shape mismatch");
    for (int i = 0; i < img_h; ++i)
      for (int t = 0; t < steps; ++t)
        grad_image->at(img_h - 1 - i, t) += dcols.at(i, t);
  }
}

}  // namespace geotr
