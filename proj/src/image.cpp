#include "fzsg/image.hpp"

#include <algorithm>
#include <cmath>

namespace fzsg {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  require(width >= 1 && height >= 1, ErrorCode::invalid_image, "image dimensions must be positive");
  data_.resize(3 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

GrayImage RgbImage::channel_plane(int c) const {
  GrayImage out(width_, height_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = channel(i, c);
  return out;
}

RgbImage RgbImage::from_planes(const GrayImage& r, const GrayImage& g, const GrayImage& b) {
  require(r.same_shape(g) && r.same_shape(b), ErrorCode::dimension_mismatch, "channel planes differ in size");
  auto q = [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  };
  RgbImage out(r.width(), r.height());
  for (std::size_t i = 0; i < r.size(); ++i) out.set_pixel(i, {q(r[i]), q(g[i]), q(b[i])});
  return out;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits_.pixels().begin(), bits_.pixels().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out = *this;
  for (auto& v : out.bits_.pixels()) v = v ? 0 : 1;
  return out;
}

BinaryMask BinaryMask::operator&(const BinaryMask& o) const {
  require(same_shape(o), ErrorCode::dimension_mismatch, "mask intersection: size mismatch");
  BinaryMask out = *this;
  for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = (bits_[i] && o.bits_[i]) ? 1 : 0;
  return out;
}

BinaryMask BinaryMask::operator|(const BinaryMask& o) const {
  require(same_shape(o), ErrorCode::dimension_mismatch, "mask union: size mismatch");
  BinaryMask out = *this;
  for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = (bits_[i] || o.bits_[i]) ? 1 : 0;
  return out;
}

BinaryMask BinaryMask::operator-(const BinaryMask& o) const {
  require(same_shape(o), ErrorCode::dimension_mismatch, "mask difference: size mismatch");
  BinaryMask out = *this;
  for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = (bits_[i] && !o.bits_[i]) ? 1 : 0;
  return out;
}

bool BinaryMask::subset_of(const BinaryMask& o) const {
  require(same_shape(o), ErrorCode::dimension_mismatch, "mask subset: size mismatch");
  for (std::size_t i = 0; i < size(); ++i)
    if (bits_[i] && !o.bits_[i]) return false;
  return true;
}

Raster<std::uint8_t> BinaryMask::to_bytes() const {
  Raster<std::uint8_t> out(width(), height());
  for (std::size_t i = 0; i < size(); ++i) out[i] = bits_[i] ? 255 : 0;
  return out;
}

BinaryMask BinaryMask::from_bytes(const Raster<std::uint8_t>& bytes, std::uint8_t threshold) {
  BinaryMask out(bytes.width(), bytes.height());
  for (std::size_t i = 0; i < bytes.size(); ++i) out.set(i, bytes[i] >= threshold);
  return out;
}

}  // namespace fzsg
