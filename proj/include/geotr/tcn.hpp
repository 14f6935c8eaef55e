#pragma once

#include <vector>

#include "geotr/ops.hpp"
#include "geotr/rng.hpp"
#include "geotr/tensor.hpp"

namespace geotr {

// Residual block over channel-major sequences [C x T]: a dilated conv with
// symmetric padding feeds a ReLU after the residual is added. A 1x1
// projection carries the residual whenever the channel count changes.
template <class T>
struct BasicTcnBlock {
  BasicTensor<T> w;   // [C_out x C_in x k]
  BasicTensor<T> b;   // [C_out]
  BasicTensor<T> wr;  // [C_out x C_in x 1], rank 0 when identity residual
  BasicTensor<T> br;
  int dilation = 1;

  BasicTcnBlock() = default;
  BasicTcnBlock(int c_in, int c_out, int kernel, int dil)
      : w({c_out, c_in, kernel}), b({c_out}), dilation(dil) {
    if (c_in != c_out) {
      wr = BasicTensor<T>({c_out, c_in, 1});
      br = BasicTensor<T>({c_out});
    }
  }

  bool has_projection() const { return wr.rank() == 3; }
};

template <class T>
void init_tcn_block(BasicTcnBlock<T>& blk, Rng& rng) {
  auto fill = [&](BasicTensor<T>& w) {
    const int fan_in = w.dim(1) * w.dim(2);
    const int fan_out = w.dim(0) * w.dim(2);
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (T& v : w.data) v = static_cast<T>(rng.uniform(-s, s));
  };
  fill(blk.w);
  blk.b.fill(T(0));
  if (blk.has_projection()) {
    fill(blk.wr);
    blk.br.fill(T(0));
  }
}

template <class T>
struct TcnBlockCache {
  BasicTensor<T> input;  // [C_in x T]
  BasicTensor<T> pre;    // [C_out x T], sum before the ReLU
};

template <class T>
BasicTensor<T> tcn_block_forward(const BasicTensor<T>& x,
                                 const BasicTcnBlock<T>& blk,
                                 TcnBlockCache<T>* cache = nullptr) {
  BasicTensor<T> pre = conv1d_forward(x, blk.w, blk.b, blk.dilation);
  if (blk.has_projection()) {
    BasicTensor<T> res = conv1d_forward(x, blk.wr, blk.br, 1);
    for (std::size_t i = 0; i < pre.data.size(); ++i)
      pre.data[i] += res.data[i];
  } else {
    if (x.dim(0) != pre.dim(0))
      throw DimensionError("tcn block: identity residual needs equal widths");
    for (std::size_t i = 0; i < pre.data.size(); ++i)
      pre.data[i] += x.data[i];
  }
  BasicTensor<T> out(pre.shape);
  for (std::size_t i = 0; i < pre.data.size(); ++i)
    out.data[i] = pre.data[i] > T(0) ? pre.data[i] : T(0);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
  }
  return out;
}

template <class T>
void tcn_block_backward(const BasicTcnBlock<T>& blk,
                        const TcnBlockCache<T>& cache,
                        const BasicTensor<T>& grad_out, BasicTcnBlock<T>& grads,
                        BasicTensor<T>* grad_input) {
  if (!grad_out.same_shape(cache.pre))
    throw DimensionError("tcn block backward: grad shape mismatch");
  BasicTensor<T> dpre(grad_out.shape);
  for (std::size_t i = 0; i < dpre.data.size(); ++i)
    dpre.data[i] = cache.pre.data[i] > T(0) ? grad_out.data[i] : T(0);

  conv1d_backward(cache.input, blk.w, dpre, blk.dilation, grad_input, grads.w,
                  grads.b);
  if (blk.has_projection()) {
    conv1d_backward(cache.input, blk.wr, dpre, 1, grad_input, grads.wr,
                    grads.br);
  } else if (grad_input) {
    for (std::size_t i = 0; i < grad_input->data.size(); ++i)
      grad_input->data[i] += dpre.data[i];
  }
}

template <class T>
struct TcnCache {
  std::vector<TcnBlockCache<T>> blocks;
};

// Stacked blocks, dilation doubling per level. [C_in x T] -> [C_out x T].
template <class T>
BasicTensor<T> tcn_forward(const BasicTensor<T>& x,
                           const std::vector<BasicTcnBlock<T>>& blocks,
                           TcnCache<T>* cache = nullptr) {
  if (blocks.empty()) throw DimensionError("tcn: no blocks");
  if (cache) cache->blocks.resize(blocks.size());
  BasicTensor<T> cur = x;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    cur = tcn_block_forward(cur, blocks[i],
                            cache ? &cache->blocks[i] : nullptr);
  return cur;
}

template <class T>
void tcn_backward(const std::vector<BasicTcnBlock<T>>& blocks,
                  const TcnCache<T>& cache, const BasicTensor<T>& grad_out,
                  std::vector<BasicTcnBlock<T>>& grads,
                  BasicTensor<T>* grad_input) {
  if (cache.blocks.size() != blocks.size() || grads.size() != blocks.size())
    throw DimensionError("tcn backward: block count mismatch");
  BasicTensor<T> g = grad_out;
  for (int i = static_cast<int>(blocks.size()) - 1; i >= 0; --i) {
    const bool innermost = i == 0;
    BasicTensor<T> gi(cache.blocks[i].input.shape);
    BasicTensor<T>* sink = (innermost && !grad_input) ? nullptr : &gi;
    tcn_block_backward(blocks[i], cache.blocks[i], g, grads[i], sink);
    if (innermost) {
      if (grad_input)
        for (std::size_t k = 0; k < gi.data.size(); ++k)
          grad_input->data[k] += gi.data[k];
    } else {
      g = std::move(gi);
    }
  }
}

}  // namespace geotr
