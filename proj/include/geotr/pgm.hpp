#pragma once

#include <string>

#include "geotr/tensor.hpp"

namespace geotr {

// Binary PGM (P5), maxval 255, header exactly "P5\n{W} {H}\n255\n".
// Pixels quantize as round(v * 255).
void write_pgm(const Tensor& image, const std::string& path);
Tensor read_pgm(const std::string& path);

// Reads P5 directly or P6 through Rec.601 luma; values land in [0,1].
Tensor read_image(const std::string& path);

}  // namespace geotr
