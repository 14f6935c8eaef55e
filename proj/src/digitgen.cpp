#include "geotr/digitgen.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "geotr/datasets.hpp"
#include "geotr/error.hpp"
#include "geotr/pgm.hpp"
#include "geotr/threading.hpp"

namespace geotr {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kSpaceClass = 10;

// 5x7 digit masks, one byte per column, LSB = top row.
constexpr std::uint8_t kFont5x7[10][5] = {
    {0x3E, 0x51, 0x49, 0x45, 0x3E},  // 0
    {0x00, 0x42, 0x7F, 0x40, 0x00},  // 1
    {0x42, 0x61, 0x51, 0x49, 0x46},  // 2
    {0x21, 0x41, 0x45, 0x4B, 0x31},  // 3
    {0x18, 0x14, 0x12, 0x7F, 0x10},  // 4
    {0x27, 0x45, 0x45, 0x45, 0x39},  // 5
    {0x3C, 0x4A, 0x49, 0x49, 0x30},  // 6
    {0x01, 0x71, 0x09, 0x05, 0x03},  // 7
    {0x36, 0x49, 0x49, 0x49, 0x36},  // 8
    {0x06, 0x49, 0x49, 0x29, 0x1E},  // 9
};

Tensor font_mask(int digit) {
  Tensor mask({7, 5});
  for (int c = 0; c < 5; ++c)
    for (int r = 0; r < 7; ++r)
      if (kFont5x7[digit][c] >> r & 1) mask.at(r, c) = 1.0f;
  return mask;
}

// Grayscale 3x3 max filter; the bold variant thickens strokes with it.
Tensor dilate3x3(const Tensor& in) {
  const int h = in.dim(0), w = in.dim(1);
  Tensor out({h, w});
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      float m = 0.0f;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < h && cc >= 0 && cc < w)
            m = std::max(m, in.at(rr, cc));
        }
      out.at(r, c) = m;
    }
  return out;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

void GlyphAtlas::validate() const {
  if (glyph_width <= 0 || glyph_height <= 0)
    throw DimensionError("atlas: non-positive glyph box");
  if (variants.empty()) throw DimensionError("atlas: no variants");
  for (const auto& glyphs : variants) {
    if (glyphs.size() != 11)
      throw DimensionError("atlas: each variant needs 10 digits plus space");
    for (std::size_t c = 0; c < glyphs.size(); ++c) {
      const Tensor& g = glyphs[c];
      if (g.rank() != 2 || g.dim(0) != glyph_height || g.dim(1) != glyph_width)
        throw DimensionError("atlas: glyph " + std::to_string(c) +
                             " has shape " + shape_str(g));
      float peak = 0.0f;
      for (float v : g.data) {
        if (v < 0.0f || v > 1.0f)
          throw NumericError("atlas: glyph values must lie in [0,1]");
        peak = std::max(peak, v);
      }
      if (c == kSpaceClass) {
        if (peak != 0.0f)
          throw NumericError("atlas: space glyph must be all zeros");
      } else if (peak <= 0.5f) {
        throw NumericError("atlas: glyph " + std::to_string(c) +
                           " has no ink above 0.5");
      }
    }
  }
}

GlyphAtlas GlyphAtlas::builtin(int glyph_width, int glyph_height) {
  GlyphAtlas atlas;
  atlas.glyph_width = glyph_width;
  atlas.glyph_height = glyph_height;
  std::vector<Tensor> plain, bold;
  for (int d = 0; d < 10; ++d) {
    const Tensor mask = font_mask(d);
    Tensor up = resize_bilinear(mask, glyph_height, glyph_width);
    bold.push_back(dilate3x3(up));
    plain.push_back(std::move(up));
  }
  plain.emplace_back(std::vector<int>{glyph_height, glyph_width});
  bold.emplace_back(std::vector<int>{glyph_height, glyph_width});
  atlas.variants.push_back(std::move(plain));
  atlas.variants.push_back(std::move(bold));
  atlas.validate();
  return atlas;
}

GlyphAtlas GlyphAtlas::from_directory(const std::string& dir, int glyph_width,
                                      int glyph_height) {
  GlyphAtlas atlas;
  atlas.glyph_width = glyph_width;
  atlas.glyph_height = glyph_height;
  std::vector<Tensor> glyphs;
  for (int d = 0; d < 10; ++d) {
    const std::string path = dir + "/" + std::to_string(d) + ".pgm";
    glyphs.push_back(resize_bilinear(read_pgm(path), glyph_height, glyph_width));
  }
  glyphs.emplace_back(std::vector<int>{glyph_height, glyph_width});
  atlas.variants.push_back(std::move(glyphs));
  atlas.validate();
  return atlas;
}

std::vector<std::string> GenSpec::category_names() const {
  std::vector<std::string> names;
  for (int d = 0; d < 10; ++d) names.push_back(std::to_string(d));
  if (space_class) names.push_back(" ");
  return names;
}

void GenSpec::prepare() {
  if (atlas.empty()) atlas = GlyphAtlas::builtin();
  validate();
}

void GenSpec::validate() const {
  if (width <= 0 || height <= 0 || slots <= 0 || base_spacing < 0)
    throw DimensionError("genspec: non-positive geometry");
  atlas.validate();
  if (atlas.glyph_height > height)
    throw DimensionError("genspec: glyph taller than canvas");
  const int base_total =
      slots * atlas.glyph_width + (slots - 1) * base_spacing;
  if (base_total > width)
    throw DimensionError("genspec: " + std::to_string(slots) +
                         " glyphs at base metrics need " +
                         std::to_string(base_total) + " px, canvas is " +
                         std::to_string(width));
  auto ordered = [](const GenRange& r) { return r.lo <= r.hi && r.lo >= 0; };
  if (!ordered(spacing_scale) || !ordered(width_scale) || !ordered(background) ||
      !ordered(shadow_factor))
    throw DimensionError("genspec: malformed augmentation range");
  if (width_scale.lo <= 0) throw DimensionError("genspec: width scale <= 0");
  if (min_contrast < 0 || min_contrast > 0.5)
    throw DimensionError("genspec: contrast bound outside [0, 0.5]");
  if (noise_sigma < 0 || max_shadows < 0 || max_bursts < 0 ||
      burst_max_gain < 0)
    throw DimensionError("genspec: negative augmentation parameter");
}

StickerSample render_sticker(const GenSpec& spec, std::uint64_t sample_index) {
  spec.validate();
  Rng rng = Rng::for_sample(spec.master_seed, sample_index);
  const int gw = spec.atlas.glyph_width, gh = spec.atlas.glyph_height;
  const int slots = spec.slots;

  // Draw order is part of the determinism contract: classes, variants, then
  // per-retry widths and gaps, then intensities, shadows, bursts, noise.
  StickerSample out;
  out.labels.resize(slots);
  for (int m = 0; m < slots; ++m)
    out.labels[m] = static_cast<int>(rng.below(spec.num_classes()));
  std::vector<int> variant(slots);
  for (int m = 0; m < slots; ++m)
    variant[m] = static_cast<int>(rng.below(spec.atlas.variants.size()));

  std::vector<int> widths(slots, gw), gaps(slots - 1, spec.base_spacing);
  int total = 0;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 10)
      throw NumericError("digitgen: layout overflow persists after 10 retries");
    if (spec.dynamic_width)
      for (int m = 0; m < slots; ++m)
        widths[m] = std::max<int>(
            1, std::lround(gw * rng.uniform(spec.width_scale.lo,
                                            spec.width_scale.hi)));
    if (spec.random_spacing)
      for (int g = 0; g + 1 < slots; ++g)
        gaps[g] = std::lround(spec.base_spacing *
                              rng.uniform(spec.spacing_scale.lo,
                                          spec.spacing_scale.hi));
    total = 0;
    for (int w : widths) total += w;
    for (int g : gaps) total += g;
    if (total <= spec.width) break;
    if (!spec.dynamic_width && !spec.random_spacing)
      throw NumericError("digitgen: fixed layout exceeds canvas");
  }

  double bg = 0.0, fg = 1.0;
  if (spec.dynamic_background) {
    bg = rng.uniform(spec.background.lo, spec.background.hi);
    do {
      fg = rng.uniform(0.0, 1.0);
    } while (std::abs(fg - bg) < spec.min_contrast);
  }

  out.image = Tensor({spec.height, spec.width});
  out.image.fill(static_cast<float>(bg));
  const int y0 = (spec.height - gh) / 2;
  int x = (spec.width - total) / 2;
  for (int m = 0; m < slots; ++m) {
    const Tensor& glyph = spec.atlas.variants[variant[m]][out.labels[m]];
    if (out.labels[m] != kSpaceClass) {
      const Tensor scaled = widths[m] == gw
                                ? glyph
                                : resize_bilinear(glyph, gh, widths[m]);
      for (int r = 0; r < gh; ++r)
        for (int c = 0; c < widths[m]; ++c) {
          const float a = scaled.at(r, c);
          out.image.at(y0 + r, x + c) =
              static_cast<float>(bg + (fg - bg) * a);
        }
    }
    out.boxes.push_back({static_cast<double>(x), static_cast<double>(y0),
                         static_cast<double>(widths[m]),
                         static_cast<double>(gh)});
    x += widths[m];
    if (m + 1 < slots) x += gaps[m];
  }

  if (spec.shadow_patches) {
    const int n = static_cast<int>(rng.below(spec.max_shadows + 1));
    for (int s = 0; s < n; ++s) {
      const int sx = static_cast<int>(rng.below(spec.width));
      const int sy = static_cast<int>(rng.below(spec.height));
      const int sw = 1 + static_cast<int>(rng.below(spec.width - sx));
      const int sh = 1 + static_cast<int>(rng.below(spec.height - sy));
      const double f =
          rng.uniform(spec.shadow_factor.lo, spec.shadow_factor.hi);
      for (int r = sy; r < sy + sh; ++r)
        for (int c = sx; c < sx + sw; ++c)
          out.image.at(r, c) = static_cast<float>(out.image.at(r, c) * f);
    }
  }

  if (spec.light_bursts) {
    const int n = static_cast<int>(rng.below(spec.max_bursts + 1));
    for (int b = 0; b < n; ++b) {
      const int cx = static_cast<int>(rng.below(spec.width));
      const int cy = static_cast<int>(rng.below(spec.height));
      const double radius = rng.uniform(8.0, spec.width / 2.0);
      const double gain =
          rng.uniform(spec.burst_max_gain / 3.0, spec.burst_max_gain);
      for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c) {
          const double d = std::hypot(r - cy, c - cx);
          if (d < radius)
            out.image.at(r, c) +=
                static_cast<float>(gain * (1.0 - d / radius));
        }
    }
  }

  if (spec.noise)
    for (float& v : out.image.data)
      v += static_cast<float>(rng.gaussian() * spec.noise_sigma);

  for (float& v : out.image.data) v = static_cast<float>(clamp01(v));
  return out;
}

void write_coco_manifest(const std::vector<SampleMeta>& samples,
                         const std::vector<std::string>& category_names,
                         const std::string& path) {
  json images = json::array(), annotations = json::array(),
       categories = json::array();
  for (std::size_t c = 0; c < category_names.size(); ++c)
    categories.push_back(
        {{"id", static_cast<int>(c)}, {"name", category_names[c]}});
  const int slots =
      samples.empty() ? 0 : static_cast<int>(samples.front().labels.size());
  for (const SampleMeta& s : samples) {
    images.push_back({{"id", s.id},
                      {"file_name", s.file_name},
                      {"width", s.width},
                      {"height", s.height}});
    for (std::size_t m = 0; m < s.labels.size(); ++m) {
      const Box& b = s.boxes[m];
      annotations.push_back(
          {{"id", s.id * slots + static_cast<int>(m)},
           {"image_id", s.id},
           {"category_id", s.labels[m]},
           {"bbox", {b.x, b.y, b.w, b.h}},
           {"area", b.w * b.h}});
    }
  }
  json manifest{{"images", images},
                {"annotations", annotations},
                {"categories", categories}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << manifest.dump();
  if (!out) throw IoError("write failed: " + path);
}

std::string generate_dataset(const GenSpec& raw_spec, int count,
                             const std::string& out_dir) {
  if (count < 0) throw DimensionError("generate_dataset: negative count");
  GenSpec spec = raw_spec;
  spec.prepare();
  fs::create_directories(out_dir);

  std::vector<SampleMeta> meta(count);
  std::mutex err_mutex;
  std::exception_ptr first_error;
  parallel_for(count, [&](int i) {
    try {
      char name[16];
      std::snprintf(name, sizeof name, "%08d.pgm", i);
      StickerSample s = render_sticker(spec, static_cast<std::uint64_t>(i));
      write_pgm(s.image, out_dir + "/" + name);
      meta[i] = {i,        name,           spec.width,
                 spec.height, std::move(s.labels), std::move(s.boxes)};
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  });
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const IoError& e) {
      throw IoError(std::string(e.what()) + " (partial dataset left in " +
                    out_dir + ")");
    }
  }

  const std::string manifest_path = out_dir + "/manifest.json";
  write_coco_manifest(meta, spec.category_names(), manifest_path);
  return manifest_path;
}

}  // namespace geotr
