#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geotr/rng.hpp"
#include "geotr/tensor.hpp"

namespace geotr {

// Grayscale glyph masks in [0,1], one per class per font variant. Class
// index 10, when present, is the space glyph and stays all zeros.
struct GlyphAtlas {
  int glyph_width = 0;
  int glyph_height = 0;
  std::vector<std::vector<Tensor>> variants;  // [variant][class]

  bool empty() const { return variants.empty(); }
  void validate() const;

  // Embedded 5x7 digit font upscaled bilinearly; two variants, plain and
  // bold (one-pixel dilation after upscaling).
  static GlyphAtlas builtin(int glyph_width = 16, int glyph_height = 22);

  // Single variant from {0.pgm .. 9.pgm} in a directory, resized to the
  // requested glyph box.
  static GlyphAtlas from_directory(const std::string& dir,
                                   int glyph_width = 16,
                                   int glyph_height = 22);
};

struct GenRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct GenSpec {
  int width = 224;
  int height = 28;
  int slots = 8;
  int base_spacing = 8;

  bool random_spacing = false;
  bool space_class = false;
  bool dynamic_background = false;
  bool dynamic_width = false;
  bool noise = false;
  bool shadow_patches = false;
  bool light_bursts = false;

  GenRange spacing_scale{0.25, 2.0};  // multiplies base_spacing per gap
  GenRange width_scale{0.6, 1.4};     // per-glyph horizontal scale
  GenRange background{0.0, 0.6};
  double min_contrast = 0.3;  // |foreground - background| lower bound
  double noise_sigma = 0.05;
  int max_shadows = 2;
  GenRange shadow_factor{0.5, 0.9};
  int max_bursts = 1;
  double burst_max_gain = 0.3;

  std::uint64_t master_seed = 0;
  GlyphAtlas atlas;  // builtin() is substituted when left empty

  int num_classes() const { return space_class ? 11 : 10; }
  std::vector<std::string> category_names() const;

  // Fills in the default atlas and checks layout feasibility at base
  // metrics plus range sanity.
  void prepare();
  void validate() const;
};

struct Box {
  double x = 0, y = 0, w = 0, h = 0;
};

struct StickerSample {
  Tensor image;             // [H x W] in [0,1]
  std::vector<int> labels;  // left-to-right, length = slots
  std::vector<Box> boxes;   // ascending x, within canvas
};

// Pure function of (spec, sample_index); the per-sample stream is seeded
// with splitmix64(master_seed ^ sample_index).
StickerSample render_sticker(const GenSpec& spec, std::uint64_t sample_index);

struct SampleMeta {
  int id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  std::vector<Box> boxes;
};

void write_coco_manifest(const std::vector<SampleMeta>& samples,
                         const std::vector<std::string>& category_names,
                         const std::string& path);

// Streams count stickers to out_dir as {index:08}.pgm plus manifest.json;
// returns the manifest path. Holds one rendered sample in memory at a time.
std::string generate_dataset(const GenSpec& spec, int count,
                             const std::string& out_dir);

}  // namespace geotr
