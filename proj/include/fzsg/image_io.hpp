#pragma once

#include <cstdint>
#include <filesystem>

#include "fzsg/image.hpp"

namespace fzsg::io {

/// Reads 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or baseline JPEG as RGB.
/// Format is sniffed from the file signature, not the extension.
RgbImage read_rgb(const std::filesystem::path& path);

/// Reads a single-channel 8-bit image. Palette PNGs yield palette indices;
/// RGB inputs yield the red channel.
Raster<std::uint8_t> read_gray8(const std::filesystem::path& path);

/// Reads a mask PNG; any value >= 128 is foreground.
BinaryMask read_mask(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& img);
void write_png(const std::filesystem::path& path, const Raster<std::uint8_t>& gray);
/// Foreground = 255, background = 0.
void write_png(const std::filesystem::path& path, const BinaryMask& mask);

/// Linear map of [lo, hi] onto [0,255] for viewing real-valued planes.
Raster<std::uint8_t> to_viewable(const GrayImage& plane);

}  // namespace fzsg::io
