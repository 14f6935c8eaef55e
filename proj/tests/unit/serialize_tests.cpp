#include <doctest.h>

#include <cstdint>
#include <vector>

#include "geotr/model.hpp"
#include "geotr/rng.hpp"
#include "geotr/serialize.hpp"
#include "test_util.hpp"

using namespace geotr;
using geotr_test::TempDir;
using geotr_test::dump_bytes;
using geotr_test::slurp_bytes;

namespace {

ModelConfig toy_config() {
  ModelConfig cfg;
  cfg.width = 12;
  cfg.height = 6;
  cfg.slots = 2;
  cfg.classes = 3;
  cfg.labels = "abc";
  cfg.encoder.hidden_per_dir = 4;
  cfg.encoder.second_width = 5;
  return cfg;
}

FormatError::Kind load_kind(const std::string& path) {
  try {
    load_model(path);
  } catch (const FormatError& e) {
    return e.kind;
  }
  FAIL("expected FormatError");
  return FormatError::Kind::Magic;
}

}  // namespace

TEST_SUITE("serialize") {

TEST_CASE("round trip preserves config and every parameter bit") {
  TempDir tmp;
  Model m(toy_config());
  m.init(31);
  const std::string path = tmp.file("m.gtrn");
  save_model(m, path);
  Model back = load_model(path);

  CHECK(back.cfg.width == m.cfg.width);
  CHECK(back.cfg.labels == m.cfg.labels);
  CHECK(back.param_count() == m.param_count());

  std::vector<float> a, b;
  m.for_each_param([&](const std::string&, const Tensor& t) {
    a.insert(a.end(), t.data.begin(), t.data.end());
  });
  back.for_each_param([&](const std::string&, const Tensor& t) {
    b.insert(b.end(), t.data.begin(), t.data.end());
  });
  CHECK(a == b);
}

TEST_CASE("round trip preserves the forward pass bitwise") {
  TempDir tmp;
  Model m(toy_config());
  m.init(37);
  const std::string path = tmp.file("m.gtrn");
  save_model(m, path);
  Model back = load_model(path);

  Rng rng(113);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor img({6, 12});
    for (float& v : img.data) v = static_cast<float>(rng.uniform(0, 1));
    Tensor p1 = m.forward(img);
    Tensor p2 = back.forward(img);
    CHECK(p1.data == p2.data);
  }
}

TEST_CASE("file begins with the magic and ends with a crc") {
  TempDir tmp;
  Model m(toy_config());
  m.init(41);
  const std::string path = tmp.file("m.gtrn");
  save_model(m, path);
  const auto bytes = slurp_bytes(path);
  REQUIRE(bytes.size() > 12);
  CHECK(bytes[0] == 'G');
  CHECK(bytes[1] == 'T');
  CHECK(bytes[2] == 'R');
  CHECK(bytes[3] == 'N');
  CHECK(bytes[4] == 1);  // version 1, little-endian u32
  CHECK(bytes[5] == 0);
}

TEST_CASE("single corrupted payload byte reports a checksum failure") {
  TempDir tmp;
  Model m(toy_config());
  m.init(43);
  const std::string path = tmp.file("m.gtrn");
  save_model(m, path);
  auto bytes = slurp_bytes(path);
  bytes[bytes.size() / 2] ^= 0x01;
  dump_bytes(path, bytes);
  CHECK(load_kind(path) == FormatError::Kind::Checksum);
}

TEST_CASE("wrong magic is detected before anything else") {
  TempDir tmp;
  Model m(toy_config());
  m.init(47);
  const std::string path = tmp.file("m.gtrn");
  save_model(m, path);
  auto bytes = slurp_bytes(path);
  bytes[0] = 'X';
  bytes[1] = 'X';
  dump_bytes(path, bytes);
  CHECK(load_kind(path) == FormatError::Kind::Magic);
}

TEST_CASE("unsupported version is reported as such") {
  TempDir tmp;
  Model m(toy_config());
  m.init(53);
  const std::string path = tmp.file("m.gtrn");
  save_model(m, path);
  auto bytes = slurp_bytes(path);
  bytes[4] = 9;
  dump_bytes(path, bytes);
  CHECK(load_kind(path) == FormatError::Kind::Version);
}

TEST_CASE("truncation wins over checksum in the error taxonomy") {
  TempDir tmp;
  Model m(toy_config());
  m.init(59);
  const std::string path = tmp.file("m.gtrn");
  save_model(m, path);
  const auto bytes = slurp_bytes(path);

  // Cut mid-payload: structurally short, and the crc bytes are gone too.
  auto cut = bytes;
  cut.resize(bytes.size() / 2);
  dump_bytes(path, cut);
  CHECK(load_kind(path) == FormatError::Kind::Truncated);

  // Cut just the final crc byte: payload intact, checksum unreadable.
  auto nocrc = bytes;
  nocrc.resize(bytes.size() - 1);
  dump_bytes(path, nocrc);
  CHECK(load_kind(path) == FormatError::Kind::Truncated);
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(load_model("/nonexistent/path/m.gtrn"), IoError);
}

TEST_CASE("trailing garbage after the checksum is rejected") {
  TempDir tmp;
  Model m(toy_config());
  m.init(61);
  const std::string path = tmp.file("m.gtrn");
  save_model(m, path);
  auto bytes = slurp_bytes(path);
  bytes.push_back(0xAB);
  bytes.push_back(0xCD);
  dump_bytes(path, bytes);
  CHECK_THROWS_AS(load_model(path), FormatError);
}

}  // TEST_SUITE
