#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fzsg/error.hpp"

namespace fzsg {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major single-plane raster. Used directly as the real-valued gray image.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    require(width >= 1 && height >= 1, ErrorCode::invalid_image, "raster dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Edge-replicated read; coordinates outside the raster clamp to the nearest edge.
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return data_[index(x, y)];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::span<T> row(int y) { return std::span<T>(data_).subspan(index(0, y), width_); }
  std::span<const T> row(int y) const { return std::span<const T>(data_).subspan(index(0, y), width_); }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Raster<double>;

/// 8-bit interleaved RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return data_.size() / 3; }

  Rgb at(int x, int y) const {
    const std::size_t i = offset(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = offset(x, y);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }
  Rgb pixel(std::size_t i) const { return {data_[3 * i], data_[3 * i + 1], data_[3 * i + 2]}; }
  void set_pixel(std::size_t i, Rgb c) {
    data_[3 * i] = c.r;
    data_[3 * i + 1] = c.g;
    data_[3 * i + 2] = c.b;
  }
  // Channel 0 = R, 1 = G, 2 = B.
  std::uint8_t channel(std::size_t i, int c) const { return data_[3 * i + static_cast<std::size_t>(c)]; }

  std::span<std::uint8_t> bytes() noexcept { return data_; }
  std::span<const std::uint8_t> bytes() const noexcept { return data_; }

  GrayImage channel_plane(int c) const;
  static RgbImage from_planes(const GrayImage& r, const GrayImage& g, const GrayImage& b);

  bool same_shape(const RgbImage& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x));
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Boolean raster, true = foreground.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false) : bits_(width, height, fill ? 1 : 0) {}

  int width() const noexcept { return bits_.width(); }
  int height() const noexcept { return bits_.height(); }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int x, int y) const { return bits_.at(x, y) != 0; }
  void set(int x, int y, bool v) { bits_.at(x, y) = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const noexcept;
  bool none() const noexcept { return count() == 0; }

  BinaryMask complement() const;
  BinaryMask operator&(const BinaryMask& o) const;
  BinaryMask operator|(const BinaryMask& o) const;
  // Set difference: this \ o.
  BinaryMask operator-(const BinaryMask& o) const;
  bool subset_of(const BinaryMask& o) const;

  // Raster of 0/255 bytes, the on-disk mask convention.
  Raster<std::uint8_t> to_bytes() const;
  static BinaryMask from_bytes(const Raster<std::uint8_t>& bytes, std::uint8_t threshold = 128);

  bool same_shape(const BinaryMask& o) const noexcept { return bits_.same_shape(o.bits_); }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Raster<std::uint8_t> bits_;
};

/// One or more named real-valued planes of identical size.
struct MultiChannelImage {
  std::vector<GrayImage> planes;
  std::vector<std::string> names;

  int width() const { return planes.empty() ? 0 : planes.front().width(); }
  int height() const { return planes.empty() ? 0 : planes.front().height(); }
};

}  // namespace fzsg
