#pragma once

#include <string>

#include "splatfuse/core/pixel_grid.hpp"

namespace splatfuse {

// 8-bit RGB; values clamped from [0,1].
void write_png_rgb8(const std::string& path, const GridV3& image);
GridV3 read_png_rgb8(const std::string& path);

// 16-bit grayscale; value*scale rounded and clamped to [0, 65535].
// Reading divides by the same scale. Depth maps use scale = 5000 per meter.
void write_png_gray16(const std::string& path, const GridD& values,
                      double scale);
GridD read_png_gray16(const std::string& path, double scale);

constexpr double kDepthPngScale = 5000.0;  // units per meter

// Headerless row-major little-endian f32 dump.
void write_raw_f32(const std::string& path, const GridD& values);
GridD read_raw_f32(const std::string& path, int width, int height);

}  // namespace splatfuse
