#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "supernerf/core/image.hpp"

namespace supernerf {

/// Writes a lossless RGB PNG. bit_depth is 8 or 16; values are clamped to [0, 1].
void write_png(const std::filesystem::path& path, const ImageBuffer& img, int bit_depth = 16);

/// Reads an 8- or 16-bit RGB/RGBA/gray PNG into [0, 1] floats.
ImageBuffer read_png(const std::filesystem::path& path);

/// Raw 8-bit RGB writer used for plots.
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);

}  // namespace supernerf
