#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>

#include "geotr/datasets.hpp"
#include "geotr/pgm.hpp"
#include "geotr/rng.hpp"
#include "test_util.hpp"

using namespace geotr;
using geotr_test::TempDir;
using geotr_test::dump_bytes;
using geotr_test::slurp_bytes;
using geotr_test::slurp_text;
using nlohmann::json;

namespace {

// Miniature digit bank standing in for the real corpus: each 28x28 patch
// carries its label as a distinctive stripe pattern.
IdxArray fake_images(int n) {
  IdxArray arr;
  arr.dims = {n, 28, 28};
  arr.payload.resize(static_cast<std::size_t>(n) * 28 * 28);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c)
        arr.payload[(static_cast<std::size_t>(i) * 28 + r) * 28 + c] =
            static_cast<std::uint8_t>((r * (i % 10 + 1) + c) % 256);
  return arr;
}

IdxArray fake_labels(int n) {
  IdxArray arr;
  arr.dims = {n};
  arr.payload.resize(n);
  for (int i = 0; i < n; ++i)
    arr.payload[i] = static_cast<std::uint8_t>(i % 10);
  return arr;
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("idx round trip is bitwise") {
  TempDir tmp;
  IdxArray arr = fake_images(3);
  const std::string path = tmp.file("t.idx");
  write_idx(arr, path);
  IdxArray back = read_idx(path);
  CHECK(back.dims == arr.dims);
  CHECK(back.payload == arr.payload);
}

TEST_CASE("idx magic violations are named") {
  TempDir tmp;
  const std::string path = tmp.file("bad.idx");

  // First two bytes must be zero.
  dump_bytes(path, {0x12, 0x34, 0x08, 0x01, 0, 0, 0, 1, 42});
  try {
    read_idx(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.kind == FormatError::Kind::Magic);
  }

  // Type byte other than 0x08 (unsigned byte) is unsupported.
  dump_bytes(path, {0, 0, 0x0D, 0x01, 0, 0, 0, 1, 42});
  try {
    read_idx(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.kind == FormatError::Kind::Magic);
  }
}

TEST_CASE("idx truncation reports expected and actual byte counts") {
  TempDir tmp;
  const std::string path = tmp.file("short.idx");
  // Magic 00 00 08 02, dims 3 x 4, but only 5 payload bytes of 12.
  dump_bytes(path, {0, 0, 0x08, 0x02, 0, 0, 0, 3, 0, 0, 0, 4, 1, 2, 3, 4, 5});
  try {
    read_idx(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.kind == FormatError::Kind::Truncated);
    const std::string msg = e.what();
    CHECK(msg.find("12") != std::string::npos);
    CHECK(msg.find("5") != std::string::npos);
  }
}

TEST_CASE("bilinear resize: identity, constants, hand-computed values") {
  Tensor img({2, 2});
  img.data = {0.0f, 1.0f, 0.5f, 0.25f};

  Tensor same = resize_bilinear(img, 2, 2);
  CHECK(same.data == img.data);

  Tensor flat({3, 4});
  flat.fill(0.7f);
  Tensor big = resize_bilinear(flat, 7, 9);
  for (float v : big.data) CHECK(v == doctest::Approx(0.7).epsilon(1e-6));

  // 2x2 -> 2x4 with half-pixel centers, frozen from a manual evaluation.
  Tensor wide = resize_bilinear(img, 2, 4);
  const float row0[] = {0.0f, 0.25f, 0.75f, 1.0f};
  const float row1[] = {0.5f, 0.4375f, 0.3125f, 0.25f};
  for (int c = 0; c < 4; ++c) {
    CHECK(wide.at(0, c) == doctest::Approx(row0[c]).epsilon(1e-6));
    CHECK(wide.at(1, c) == doctest::Approx(row1[c]).epsilon(1e-6));
  }
}

TEST_CASE("bilinear output stays inside the input range") {
  Rng rng(127);
  Tensor img({9, 13});
  for (float& v : img.data) v = static_cast<float>(rng.uniform(0, 1));
  Tensor out = resize_bilinear(img, 48, 244);
  for (float v : out.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("composited stickers have the target geometry and manifest") {
  TempDir tmp;
  const IdxArray images = fake_images(40);
  const IdxArray labels = fake_labels(40);
  MnistComposeSpec spec;
  spec.count = 6;
  spec.seed = 3;
  const std::string manifest =
      compose_mnist_stickers(images, labels, spec, tmp.file("d"));
  const json m = json::parse(slurp_text(manifest));
  REQUIRE(m["images"].size() == 6);
  REQUIRE(m["annotations"].size() == 48);
  REQUIRE(m["categories"].size() == 10);
  for (const auto& img : m["images"]) {
    CHECK(img["width"] == 244);
    CHECK(img["height"] == 48);
  }
  Tensor first = read_pgm(tmp.file("d/00000000.pgm"));
  CHECK(first.dim(0) == 48);
  CHECK(first.dim(1) == 244);
  // Boxes must fit the output canvas.
  for (const auto& ann : m["annotations"]) {
    const auto& b = ann["bbox"];
    CHECK(b[0].get<double>() >= 0.0);
    CHECK(b[0].get<double>() + b[2].get<double>() <= 244.0 + 1e-6);
    CHECK(b[1].get<double>() >= 0.0);
    CHECK(b[1].get<double>() + b[3].get<double>() <= 48.0 + 1e-6);
  }
}

TEST_CASE("composition is deterministic and gap-sensitive") {
  TempDir tmp;
  const IdxArray images = fake_images(30);
  const IdxArray labels = fake_labels(30);
  MnistComposeSpec spec;
  spec.count = 4;
  spec.seed = 11;
  compose_mnist_stickers(images, labels, spec, tmp.file("a"));
  compose_mnist_stickers(images, labels, spec, tmp.file("b"));
  CHECK(slurp_bytes(tmp.file("a/00000002.pgm")) ==
        slurp_bytes(tmp.file("b/00000002.pgm")));

  spec.random_gaps = true;
  compose_mnist_stickers(images, labels, spec, tmp.file("c"));
  CHECK(slurp_bytes(tmp.file("a/00000002.pgm")) !=
        slurp_bytes(tmp.file("c/00000002.pgm")));
}

TEST_CASE("composited labels draw uniformly from the source to 3 sigma") {
  TempDir tmp;
  const IdxArray images = fake_images(50);
  const IdxArray labels = fake_labels(50);  // balanced 0..9
  MnistComposeSpec spec;
  spec.count = 1000;
  spec.seed = 5;
  const std::string manifest =
      compose_mnist_stickers(images, labels, spec, tmp.file("d"));
  const json m = json::parse(slurp_text(manifest));
  std::vector<int> counts(10, 0);
  for (const auto& ann : m["annotations"])
    ++counts[ann["category_id"].get<int>()];
  // 8000 draws, p=1/10: sigma = sqrt(8000*.09) ~ 26.8.
  for (int c : counts) {
    CHECK(c > 800 - 81);
    CHECK(c < 800 + 81);
  }
}

TEST_CASE("invert flag flips the ink polarity") {
  TempDir tmp;
  const IdxArray images = fake_images(20);
  const IdxArray labels = fake_labels(20);
  MnistComposeSpec spec;
  spec.count = 1;
  spec.seed = 2;
  compose_mnist_stickers(images, labels, spec, tmp.file("inv"));
  spec.invert = false;
  compose_mnist_stickers(images, labels, spec, tmp.file("raw"));
  Tensor a = read_pgm(tmp.file("inv/00000000.pgm"));
  Tensor b = read_pgm(tmp.file("raw/00000000.pgm"));
  for (std::size_t i = 0; i < a.data.size(); ++i)
    CHECK(a.data[i] == doctest::Approx(1.0f - b.data[i]).epsilon(2.0 / 255));
}

TEST_CASE("manifest loading round-trips a generated dataset") {
  TempDir tmp;
  GenSpec spec;
  spec.master_seed = 77;
  spec.prepare();
  generate_dataset(spec, 8, tmp.file("d"));
  DatasetHandle ds = load_manifest(tmp.file("d"));
  CHECK(ds.count() == 8);
  CHECK(ds.width == 224);
  CHECK(ds.height == 28);
  CHECK(ds.slots == 8);
  REQUIRE(ds.category_names.size() == 10);
  CHECK(ds.category_names[3] == "3");
  for (int i = 0; i < 8; ++i) {
    REQUIRE(static_cast<int>(ds.labels[i].size()) == 8);
    StickerSample s = render_sticker(spec, static_cast<std::uint64_t>(i));
    CHECK(ds.labels[i] == s.labels);
    // Byte-quantized pixels decode within half a step of the original.
    Tensor img = ds.image(i);
    for (std::size_t k = 0; k < img.data.size(); ++k)
      CHECK(std::abs(img.data[k] - s.image.data[k]) <= 0.5f / 255 + 1e-6f);
  }
  CHECK_NOTHROW(ds.require_shape(28, 224, 8));
  CHECK_THROWS_AS(ds.require_shape(48, 244, 8), DimensionError);
}

TEST_CASE("manifest errors name the offending image") {
  TempDir tmp;
  GenSpec spec;
  generate_dataset(spec, 3, tmp.file("d"));
  std::filesystem::remove(tmp.file("d/00000001.pgm"));
  try {
    load_manifest(tmp.file("d"));
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1") != std::string::npos);
    CHECK(msg.find("00000001.pgm") != std::string::npos);
  }
}

TEST_CASE("manifests with unparseable json are structural failures") {
  TempDir tmp;
  std::filesystem::create_directories(tmp.file("d"));
  geotr_test::dump_bytes(tmp.file("d/manifest.json"), {'{', 'x'});
  try {
    load_manifest(tmp.file("d"));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.kind == FormatError::Kind::Header);
  }
}

TEST_CASE("compose validates its inputs") {
  const IdxArray images = fake_images(10);
  const IdxArray labels = fake_labels(9);  // count mismatch
  MnistComposeSpec spec;
  spec.count = 1;
  TempDir tmp;
  CHECK_THROWS_AS(compose_mnist_stickers(images, labels, spec, tmp.file("x")),
                  DimensionError);

  IdxArray flat;
  flat.dims = {10, 784};  // rank 2 instead of n x 28 x 28
  flat.payload.resize(7840);
  CHECK_THROWS_AS(
      compose_mnist_stickers(flat, fake_labels(10), spec, tmp.file("y")),
      DimensionError);
}

}  // TEST_SUITE
