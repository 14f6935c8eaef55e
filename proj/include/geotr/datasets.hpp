#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geotr/digitgen.hpp"
#include "geotr/tensor.hpp"

namespace geotr {

// Big-endian IDX container, unsigned 8-bit payload only (type byte 0x08).
struct IdxArray {
  std::vector<int> dims;
  std::vector<std::uint8_t> payload;
};

IdxArray read_idx(const std::string& path);
void write_idx(const IdxArray& arr, const std::string& path);

// Half-pixel-center bilinear resampling; output values stay in [0,1] by
// interpolation convexity.
Tensor resize_bilinear(const Tensor& image, int out_height, int out_width);

struct MnistComposeSpec {
  int count = 0;
  std::uint64_t seed = 0;
  bool random_gaps = false;  // inter-patch gaps in [0,8] px, center-cropped
  bool invert = true;        // flip MNIST's light-on-dark ink
  int out_width = 244;
  int out_height = 48;
};

// Draws 8 MNIST digits per sticker with replacement, concatenates them to a
// 224x28 strip, resizes, and emits PGM files plus manifest.json exactly
// like the synthetic generator. Returns the manifest path.
std::string compose_mnist_stickers(const IdxArray& images,
                                   const IdxArray& labels,
                                   const MnistComposeSpec& spec,
                                   const std::string& out_dir);

// Whole dataset resident as quantized bytes; samples decode to [0,1]
// tensors on demand, in manifest order.
struct DatasetHandle {
  int width = 0;
  int height = 0;
  int slots = 0;
  std::string manifest_path;
  std::vector<int> image_ids;
  std::vector<std::vector<std::uint8_t>> pixels;
  std::vector<std::vector<int>> labels;
  std::vector<std::string> category_names;

  int count() const { return static_cast<int>(pixels.size()); }
  Tensor image(int i) const;
  void require_shape(int expect_height, int expect_width,
                     int expect_slots) const;
};

DatasetHandle load_manifest(const std::string& dir);

}  // namespace geotr
