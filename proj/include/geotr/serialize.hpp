#pragma once

#include <string>

#include "geotr/model.hpp"

namespace geotr {

// Weight container: "GTRN" magic, u32 LE version (1), u32 LE config length,
// canonical config JSON, then each parameter in architecture order as
// u16 LE name length + name, u8 rank, rank x u32 LE dims, f32 LE payload;
// a trailing CRC-32 covers every preceding byte.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace geotr
