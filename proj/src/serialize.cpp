#include "geotr/serialize.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace geotr {
namespace {

constexpr char kMagic[4] = {'G', 'T', 'R', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xFF));
  buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw FormatError(FormatError::Kind::Truncated,
                        "weight file truncated at byte " + std::to_string(pos));
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                      (static_cast<std::uint16_t>(
                           static_cast<std::uint8_t>(buf[pos + 1]))
                       << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i]))
           << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_model(const Model& model, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  const std::string cfg = model_config_to_json(model.cfg);
  put_u32(buf, static_cast<std::uint32_t>(cfg.size()));
  buf += cfg;
  model.for_each_param([&](const std::string& name, const Tensor& t) {
    put_u16(buf, static_cast<std::uint16_t>(name.size()));
    buf += name;
    buf.push_back(static_cast<char>(t.rank()));
    for (int d : t.shape) put_u32(buf, static_cast<std::uint32_t>(d));
    for (float v : t.data) put_f32(buf, v);
  });
  put_u32(buf, static_cast<std::uint32_t>(
                   crc32(0, reinterpret_cast<const Bytef*>(buf.data()),
                         static_cast<uInt>(buf.size()))));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());

  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw FormatError(FormatError::Kind::Magic,
                      "not a weight file (bad magic): " + path);
  if (buf.size() < 16)
    throw FormatError(FormatError::Kind::Truncated,
                      "weight file shorter than its fixed header");
  // The final 4 bytes are the CRC; everything before is the body. Structure
  // is parsed first so truncation reports as truncation, not as a bad CRC.
  const std::size_t body = buf.size() - 4;

  Reader r{buf, 4};
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError(FormatError::Kind::Version,
                      "unsupported weight file version " +
                          std::to_string(version));
  const std::uint32_t cfg_len = r.u32();
  if (r.pos + cfg_len > body)
    throw FormatError(FormatError::Kind::Truncated,
                      "config blob length exceeds file size");
  Model model(model_config_from_json(r.bytes(cfg_len)));

  model.for_each_param([&](const std::string& name, Tensor& t) {
    const std::uint16_t len = r.u16();
    if (r.pos + len > body)
      throw FormatError(FormatError::Kind::Truncated,
                        "weight file truncated inside parameter name");
    const std::string got = r.bytes(len);
    if (got != name)
      throw FormatError(FormatError::Kind::Header,
                        "parameter order mismatch: expected '" + name +
                            "', found '" + got + "'");
    const int rank = r.u8();
    if (rank != t.rank())
      throw FormatError(FormatError::Kind::Header,
                        "parameter rank mismatch for '" + name + "'");
    for (int d = 0; d < rank; ++d)
      if (r.u32() != static_cast<std::uint32_t>(t.dim(d)))
        throw FormatError(FormatError::Kind::Header,
                          "parameter shape mismatch for '" + name + "'");
    if (r.pos + 4 * t.data.size() > body)
      throw FormatError(FormatError::Kind::Truncated,
                        "weight file truncated inside '" + name + "' payload");
    for (float& v : t.data) v = r.f32();
  });
  if (r.pos > body)
    throw FormatError(FormatError::Kind::Truncated,
                      "weight file truncated before its checksum");
  if (r.pos < body)
    throw FormatError(FormatError::Kind::Truncated,
                      "weight file has " + std::to_string(body - r.pos) +
                          " unexpected trailing bytes");

  Reader tail{buf, body};
  const std::uint32_t stored_crc = tail.u32();
  const std::uint32_t actual_crc = static_cast<std::uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(buf.data()),
            static_cast<uInt>(body)));
  if (stored_crc != actual_crc)
    throw FormatError(FormatError::Kind::Checksum,
                      "weight file checksum mismatch");
  return model;
}

}  // namespace geotr
