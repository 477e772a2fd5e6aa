#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vantage/grid.hpp"

namespace vantage {

/// RFA field exchange format:
///
///   "RFA1\n"
///   {"shape":[...],"dtype":"f32le","order":"row-major","dx":<real>,"origin":[...]}\n
///   prod(shape) little-endian IEEE-754 binary32 values
///
/// Values are narrowed to float on write; a field whose values are already
/// float-representable round-trips bit-exactly.
std::vector<std::uint8_t> encode_rfa(const ScalarField& field);
ScalarField decode_rfa(std::span<const std::uint8_t> bytes);

void write_rfa(const ScalarField& field, const std::filesystem::path& path);
ScalarField read_rfa(const std::filesystem::path& path);

/// Min-max scaled 8-bit binary PGM (P5) for quick looks at 2D fields; 3D
/// fields are written as a vertical stack of axis-0 slices.
void write_pgm_preview(const ScalarField& field, const std::filesystem::path& path);

}  // namespace vantage
