#pragma once

#include <filesystem>

#include "nrdq/image.hpp"

namespace nrdq {

/// Reads binary PGM (P5), PPM (P6) or PNG. 16-bit sources are rescaled to
/// [0, 255]; PNG alpha is dropped and palettes are expanded.
Image load_image(const std::filesystem::path& path);

/// Writes 8-bit output; the format follows the extension (.pgm, .ppm, .png).
/// Samples are rounded and clamped.
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace nrdq
