#include "geotr/pgm.hpp"

#include <cmath>
#include <fstream>

#include "geotr/error.hpp"

namespace geotr {
namespace {

// Single whitespace-delimited PNM header token, '#' comments skipped.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty())
    throw FormatError(FormatError::Kind::Truncated, "pnm: header ends early");
  return tok;
}

int header_int(std::istream& in, const char* what) {
  const std::string tok = next_token(in);
  try {
    const int v = std::stoi(tok);
    if (v <= 0) throw std::invalid_argument("non-positive");
    return v;
  } catch (const std::exception&) {
    throw FormatError(FormatError::Kind::Header,
                      std::string("pnm: bad ") + what + " '" + tok + "'");
  }
}

struct PnmHeader {
  std::string magic;
  int width = 0, height = 0, maxval = 0;
};

PnmHeader read_header(std::istream& in, const std::string& path) {
  PnmHeader h;
  char m[2];
  if (!in.read(m, 2))
    throw FormatError(FormatError::Kind::Truncated, "pnm: empty file " + path);
  h.magic.assign(m, 2);
  if (h.magic != "P5" && h.magic != "P6")
    throw FormatError(FormatError::Kind::Magic,
                      "pnm: unsupported format '" + h.magic + "' in " + path +
                          " (binary P5/P6 only)");
  h.width = header_int(in, "width");
  h.height = header_int(in, "height");
  h.maxval = header_int(in, "maxval");
  if (h.maxval < 1 || h.maxval > 255)
    throw FormatError(FormatError::Kind::Header,
                      "pnm: maxval " + std::to_string(h.maxval) +
                          " out of the single-byte range");
  return h;
}

std::vector<std::uint8_t> read_payload(std::istream& in, std::size_t n,
                                       const std::string& path) {
  std::vector<std::uint8_t> bytes(n);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw FormatError(FormatError::Kind::Truncated,
                      "pnm: expected " + std::to_string(n) +
                          " payload bytes, got " + std::to_string(in.gcount()) +
                          " in " + path);
  return bytes;
}

}  // namespace

void write_pgm(const Tensor& image, const std::string& path) {
  if (image.rank() != 2) throw DimensionError("write_pgm: image must be rank 2");
  const int h = image.dim(0), w = image.dim(1);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::min(1.0f, std::max(0.0f, image.data[i]));
    bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

Tensor read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P5")
    throw FormatError(FormatError::Kind::Magic,
                      "expected grayscale P5, got " + h.magic + ": " + path);
  const auto bytes =
      read_payload(in, static_cast<std::size_t>(h.width) * h.height, path);
  Tensor img({h.height, h.width});
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.data[i] = static_cast<float>(bytes[i]) / h.maxval;
  return img;
}

Tensor read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  const PnmHeader h = read_header(in, path);
  const std::size_t pixels = static_cast<std::size_t>(h.width) * h.height;
  if (h.magic == "P5") {
    const auto bytes = read_payload(in, pixels, path);
    Tensor img({h.height, h.width});
    for (std::size_t i = 0; i < pixels; ++i)
      img.data[i] = static_cast<float>(bytes[i]) / h.maxval;
    return img;
  }
  const auto bytes = read_payload(in, pixels * 3, path);
  Tensor img({h.height, h.width});
  for (std::size_t i = 0; i < pixels; ++i) {
    const float r = bytes[3 * i], g = bytes[3 * i + 1], b = bytes[3 * i + 2];
    img.data[i] = (0.299f * r + 0.587f * g + 0.114f * b) / h.maxval;
  }
  return img;
}

}  // namespace geotr
