#include "geotr/datasets.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "geotr/error.hpp"
#include "geotr/pgm.hpp"
#include "geotr/rng.hpp"

namespace geotr {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kPatch = 28;  // MNIST digit side
constexpr int kSlots = 8;

std::uint32_t read_u32_be(std::istream& in, const char* what) {
  std::uint8_t b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(FormatError::Kind::Truncated,
                      std::string("idx: header ends inside ") + what);
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
}

}  // namespace

IdxArray read_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open idx file: " + path);
  std::uint8_t magic[4];
  if (!in.read(reinterpret_cast<char*>(magic), 4))
    throw FormatError(FormatError::Kind::Truncated, "idx: no magic in " + path);
  if (magic[0] != 0 || magic[1] != 0)
    throw FormatError(FormatError::Kind::Magic,
                      "idx: bad magic prefix in " + path);
  if (magic[2] != 0x08)
    throw FormatError(FormatError::Kind::Magic,
                      "idx: only unsigned byte payloads (type 0x08) supported");
  const int rank = magic[3];
  if (rank < 1 || rank > 4)
    throw FormatError(FormatError::Kind::Header,
                      "idx: implausible rank " + std::to_string(rank));

  IdxArray arr;
  std::uint64_t total = 1;
  for (int d = 0; d < rank; ++d) {
    const std::uint32_t dim = read_u32_be(in, "dims");
    total *= dim;
    if (total > (1ull << 33))
      throw FormatError(FormatError::Kind::Header,
                        "idx: dimensions overflow a sane payload size");
    arr.dims.push_back(static_cast<int>(dim));
  }
  arr.payload.resize(total);
  in.read(reinterpret_cast<char*>(arr.payload.data()),
          static_cast<std::streamsize>(total));
  const std::uint64_t got = static_cast<std::uint64_t>(in.gcount());
  if (got != total)
    throw FormatError(FormatError::Kind::Truncated,
                      "idx: expected " + std::to_string(total) +
                          " payload bytes, got " + std::to_string(got) +
                          " in " + path);
  return arr;
}

void write_idx(const IdxArray& arr, const std::string& path) {
  if (arr.dims.empty() || arr.dims.size() > 4)
    throw DimensionError("write_idx: rank must be 1..4");
  std::uint64_t total = 1;
  for (int d : arr.dims) {
    if (d < 0) throw DimensionError("write_idx: negative dimension");
    total *= static_cast<std::uint64_t>(d);
  }
  if (total != arr.payload.size())
    throw DimensionError("write_idx: payload size does not match dims");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::uint8_t magic[4] = {0, 0, 0x08,
                                 static_cast<std::uint8_t>(arr.dims.size())};
  out.write(reinterpret_cast<const char*>(magic), 4);
  for (int d : arr.dims) {
    const std::uint8_t be[4] = {static_cast<std::uint8_t>(d >> 24),
                                static_cast<std::uint8_t>(d >> 16),
                                static_cast<std::uint8_t>(d >> 8),
                                static_cast<std::uint8_t>(d)};
    out.write(reinterpret_cast<const char*>(be), 4);
  }
  out.write(reinterpret_cast<const char*>(arr.payload.data()),
            static_cast<std::streamsize>(arr.payload.size()));
  if (!out) throw IoError("write failed: " + path);
}

Tensor resize_bilinear(const Tensor& image, int out_height, int out_width) {
  if (image.rank() != 2)
    throw DimensionError("resize_bilinear: image must be rank 2");
  if (out_height <= 0 || out_width <= 0)
    throw DimensionError("resize_bilinear: non-positive target dims");
  const int in_h = image.dim(0), in_w = image.dim(1);
  Tensor out({out_height, out_width});
  const double sy = static_cast<double>(in_h) / out_height;
  const double sx = static_cast<double>(in_w) / out_width;
  for (int r = 0; r < out_height; ++r) {
    const double fy = std::max(0.0, std::min((r + 0.5) * sy - 0.5,
                                             static_cast<double>(in_h - 1)));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_width; ++c) {
      const double fx = std::max(
          0.0, std::min((c + 0.5) * sx - 0.5, static_cast<double>(in_w - 1)));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - x0;
      const double top = image.at(y0, x0) * (1 - wx) + image.at(y0, x1) * wx;
      const double bot = image.at(y1, x0) * (1 - wx) + image.at(y1, x1) * wx;
      out.at(r, c) = static_cast<float>(top * (1 - wy) + bot * wy);
    }
  }
  return out;
}

std::string compose_mnist_stickers(const IdxArray& images,
                                   const IdxArray& labels,
                                   const MnistComposeSpec& spec,
                                   const std::string& out_dir) {
  if (images.dims.size() != 3 || images.dims[1] != kPatch ||
      images.dims[2] != kPatch)
    throw DimensionError("mnist: images must be [n x 28 x 28]");
  if (labels.dims.size() != 1 || labels.dims[0] != images.dims[0])
    throw DimensionError("mnist: label count does not match image count");
  if (spec.count < 1) throw DimensionError("mnist: count must be >= 1");
  const int n = images.dims[0];
  if (n < 1) throw DimensionError("mnist: empty source set");
  const int strip_w = kSlots * kPatch;  // 224 before gaps

  fs::create_directories(out_dir);
  std::vector<SampleMeta> meta(spec.count);
  for (int i = 0; i < spec.count; ++i) {
    Rng rng = Rng::for_sample(spec.seed, static_cast<std::uint64_t>(i));
    std::vector<int> picks(kSlots), gaps(kSlots - 1, 0);
    for (int m = 0; m < kSlots; ++m)
      picks[m] = static_cast<int>(rng.below(n));
    int gap_total = 0;
    if (spec.random_gaps)
      for (int g = 0; g + 1 < kSlots; ++g) {
        gaps[g] = static_cast<int>(rng.below(9));
        gap_total += gaps[g];
      }

    Tensor strip({kPatch, strip_w + gap_total});
    std::vector<double> xs(kSlots);
    int x = 0;
    for (int m = 0; m < kSlots; ++m) {
      xs[m] = x;
      const std::uint8_t* src =
          images.payload.data() +
          static_cast<std::size_t>(picks[m]) * kPatch * kPatch;
      for (int r = 0; r < kPatch; ++r)
        for (int c = 0; c < kPatch; ++c)
          strip.at(r, x + c) = src[r * kPatch + c] / 255.0f;
      x += kPatch;
      if (m + 1 < kSlots) x += gaps[m];
    }

    // Widened strips are centred back onto the fixed 224-wide window.
    const int offset = gap_total / 2;
    Tensor window({kPatch, strip_w});
    for (int r = 0; r < kPatch; ++r)
      for (int c = 0; c < strip_w; ++c)
        window.at(r, c) = strip.at(r, offset + c);

    Tensor sticker = resize_bilinear(window, spec.out_height, spec.out_width);
    if (spec.invert)
      for (float& v : sticker.data) v = 1.0f - v;

    const double fx = static_cast<double>(spec.out_width) / strip_w;
    const double fy = static_cast<double>(spec.out_height) / kPatch;
    SampleMeta& sm = meta[i];
    sm.id = i;
    char name[16];
    std::snprintf(name, sizeof name, "%08d.pgm", i);
    sm.file_name = name;
    sm.width = spec.out_width;
    sm.height = spec.out_height;
    for (int m = 0; m < kSlots; ++m) {
      sm.labels.push_back(labels.payload[picks[m]]);
      const double x0 = std::max(0.0, xs[m] - offset);
      const double x1 =
          std::min(static_cast<double>(strip_w), xs[m] - offset + kPatch);
      sm.boxes.push_back(
          {x0 * fx, 0.0, std::max(0.0, x1 - x0) * fx, kPatch * fy});
    }
    write_pgm(sticker, out_dir + "/" + sm.file_name);
  }

  std::vector<std::string> names;
  for (int d = 0; d < 10; ++d) names.push_back(std::to_string(d));
  const std::string manifest_path = out_dir + "/manifest.json";
  write_coco_manifest(meta, names, manifest_path);
  return manifest_path;
}

Tensor DatasetHandle::image(int i) const {
  if (i < 0 || i >= count()) throw IndexError("dataset: sample index range");
  Tensor img({height, width});
  const auto& px = pixels[static_cast<std::size_t>(i)];
  for (std::size_t k = 0; k < px.size(); ++k) img.data[k] = px[k] / 255.0f;
  return img;
}

void DatasetHandle::require_shape(int expect_height, int expect_width,
                                  int expect_slots) const {
  if (height != expect_height || width != expect_width)
    throw DimensionError("dataset images are " + std::to_string(width) + "x" +
                         std::to_string(height) + ", model expects " +
                         std::to_string(expect_width) + "x" +
                         std::to_string(expect_height));
  if (slots != expect_slots)
    throw DimensionError("dataset has " + std::to_string(slots) +
                         " slots per image, model expects " +
                         std::to_string(expect_slots));
}

DatasetHandle load_manifest(const std::string& dir) {
  const std::string manifest_path = dir + "/manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::Header,
                      std::string("manifest: ") + e.what());
  }

  DatasetHandle ds;
  ds.manifest_path = manifest_path;
  try {
    std::map<int, std::string> cats;  // id -> name, ordered by id
    for (const json& c : j.at("categories"))
      cats[c.at("id").get<int>()] = c.at("name").get<std::string>();
    std::map<int, int> cat_index;
    for (const auto& [id, name] : cats) {
      cat_index[id] = static_cast<int>(ds.category_names.size());
      ds.category_names.push_back(name);
    }

    // Slot labels per image, keyed by annotation id for slot order.
    std::map<int, std::map<int, int>> by_image;
    for (const json& a : j.at("annotations"))
      by_image[a.at("image_id").get<int>()][a.at("id").get<int>()] =
          cat_index.at(a.at("category_id").get<int>());

    for (const json& im : j.at("images")) {
      const int id = im.at("id").get<int>();
      const std::string file = im.at("file_name").get<std::string>();
      const int w = im.at("width").get<int>(), h = im.at("height").get<int>();
      if (ds.count() == 0) {
        ds.width = w;
        ds.height = h;
      } else if (w != ds.width || h != ds.height) {
        throw DimensionError("manifest: image id " + std::to_string(id) +
                             " has inconsistent dimensions");
      }
      Tensor img;
      try {
        img = read_pgm(dir + "/" + file);
      } catch (const std::exception& e) {
        throw IoError("image id " + std::to_string(id) + " (" + file +
                      "): " + e.what());
      }
      if (img.dim(0) != h || img.dim(1) != w)
        throw DimensionError("image id " + std::to_string(id) + " (" + file +
                             "): file is " + shape_str(img) +
                             ", manifest says " + std::to_string(h) + "x" +
                             std::to_string(w));

      std::vector<std::uint8_t> px(img.data.size());
      for (std::size_t k = 0; k < px.size(); ++k)
        px[k] = static_cast<std::uint8_t>(std::lround(img.data[k] * 255.0f));
      ds.pixels.push_back(std::move(px));
      ds.image_ids.push_back(id);

      auto it = by_image.find(id);
      std::vector<int> lab;
      if (it != by_image.end())
        for (const auto& [ann_id, cls] : it->second) lab.push_back(cls);
      if (ds.count() == 1) {
        ds.slots = static_cast<int>(lab.size());
      } else if (static_cast<int>(lab.size()) != ds.slots) {
        throw DimensionError("manifest: image id " + std::to_string(id) +
                             " has " + std::to_string(lab.size()) +
                             " annotations, expected " +
                             std::to_string(ds.slots));
      }
      ds.labels.push_back(std::move(lab));
    }
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::Header,
                      std::string("manifest: ") + e.what());
  }
  return ds;
}

}  // namespace geotr
