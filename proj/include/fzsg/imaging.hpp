#pragma once

#include "fzsg/image.hpp"

namespace fzsg::imaging {

/// Catmull-Rom cubic weight (a = -0.5).
double cubic_weight(double t);

/// Resample a real plane to the given size with a separable Catmull-Rom kernel.
/// When shrinking, the kernel is stretched by the scale factor so the result is
/// low-passed instead of aliased. Out-of-range taps replicate the edge.
GrayImage resample(const GrayImage& src, int out_width, int out_height);

/// Resize to `target_width`, preserving aspect ratio. Output height is
/// round(h * target_width / w), at least 1. Channels are clamped to [0,255].
RgbImage resize_bicubic(const RgbImage& img, int target_width);

/// Bring a working-size mask back to the original image size: bicubic
/// upsample of the 0/255 raster, then threshold at 127.5.
BinaryMask upsize_mask(const BinaryMask& mask, int orig_width, int orig_height);

/// Equal-weight gray: (R + G + B) / 3, unrounded.
GrayImage to_gray(const RgbImage& img);

enum class ColorSpace { rgb, rgb_norm, hsv, ciexyz, cielab, cieluv };

/// Three planes in the requested space.
///   rgb      : R, G, B in [0,255]
///   rgb_norm : c / (R+G+B); black maps to (1/3, 1/3, 1/3)
///   hsv      : H in [0,1) (fraction of a turn), S and V in [0,1]
///   ciexyz   : sRGB (D65) linearised, Y of white = 1
///   cielab   : L* in [0,100], a*, b*
///   cieluv   : L*, u*, v*
MultiChannelImage convert_color(const RgbImage& img, ColorSpace space);

/// Per-channel median over a square window; the border replicates edge pixels.
/// `window` must be odd and >= 3.
RgbImage median_filter(const RgbImage& img, int window);

}  // namespace fzsg::imaging
