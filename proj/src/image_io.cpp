#include "fzsg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

// jpeglib.h needs <cstdio> first.
#include <jpeglib.h>

namespace fzsg::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) fail(ErrorCode::io, "cannot open " + path.string());
  return f;
}

enum class Format { png, jpeg, unknown };

Format sniff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  in.read(reinterpret_cast<char*>(sig.data()), sig.size());
  if (in.gcount() >= 8 && png_sig_cmp(sig.data(), 0, 8) == 0) return Format::png;
  if (in.gcount() >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return Format::jpeg;
  return Format::unknown;
}

// Decoded 8-bit raster with 1 (gray or palette index) or 3 channels.
struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

void png_error_jump(png_structp png, png_const_charp) { longjmp(png_jmpbuf(png), 1); }
void png_warning_ignore(png_structp, png_const_charp) {}

// Palette images are returned as raw indices when keep_indices is set,
// otherwise expanded to RGB.
bool decode_png(std::FILE* f, bool keep_indices, Decoded& out) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_jump, png_warning_ignore);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    if (keep_indices) {
      if (depth < 8) png_set_packing(png);
    } else {
      png_set_palette_to_rgb(png);
      png_set_strip_alpha(png);
    }
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS) && color_type != PNG_COLOR_TYPE_PALETTE) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> raw(rowbytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = raw.data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  // Drop any alpha left after tRNS expansion.
  out.channels = (channels >= 3) ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height);
  out.data.resize(n * static_cast<std::size_t>(out.channels));
  for (int y = 0; y < out.height; ++y) {
    const std::uint8_t* src = raw.data() + rowbytes * static_cast<std::size_t>(y);
    for (int x = 0; x < out.width; ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(out.width) + static_cast<std::size_t>(x)) *
                            static_cast<std::size_t>(out.channels);
      for (int c = 0; c < out.channels; ++c)
        out.data[o + static_cast<std::size_t>(c)] = src[static_cast<std::size_t>(x * channels + c)];
    }
  }
  return true;
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_jump(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

bool decode_jpeg(std::FILE* f, Decoded& out) {
  jpeg_decompress_struct cinfo{};
  JpegErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_jump;
  std::vector<std::uint8_t>& data = out.data;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.channels = 3;
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  data.resize(stride * cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = data.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

Decoded decode(const std::filesystem::path& path, bool keep_indices) {
  const Format fmt = sniff(path);
  if (fmt == Format::unknown) fail(ErrorCode::io, "unsupported image format: " + path.string());
  auto f = open_file(path, "rb");
  Decoded d;
  const bool ok = fmt == Format::png ? decode_png(f.get(), keep_indices, d) : decode_jpeg(f.get(), d);
  if (!ok || d.width < 1 || d.height < 1) fail(ErrorCode::io, "corrupt or unreadable image: " + path.string());
  return d;
}

}  // namespace

RgbImage read_rgb(const std::filesystem::path& path) {
  const Decoded d = decode(path, false);
  RgbImage img(d.width, d.height);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    if (d.channels == 3)
      img.set_pixel(i, {d.data[3 * i], d.data[3 * i + 1], d.data[3 * i + 2]});
    else
      img.set_pixel(i, {d.data[i], d.data[i], d.data[i]});
  }
  return img;
}

Raster<std::uint8_t> read_gray8(const std::filesystem::path& path) {
  const Decoded d = decode(path, true);
  Raster<std::uint8_t> out(d.width, d.height);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.data[i * static_cast<std::size_t>(d.channels)];
  return out;
}

BinaryMask read_mask(const std::filesystem::path& path) { return BinaryMask::from_bytes(read_gray8(path), 128); }

namespace {

void write_png_raw(const std::filesystem::path& path, int width, int height, bool rgb, const std::uint8_t* data) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, data, 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::io, "cannot write " + path.string() + ": " + msg);
  }
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_png_raw(path, img.width(), img.height(), true, img.bytes().data());
}

void write_png(const std::filesystem::path& path, const Raster<std::uint8_t>& gray) {
  write_png_raw(path, gray.width(), gray.height(), false, gray.pixels().data());
}

void write_png(const std::filesystem::path& path, const BinaryMask& mask) { write_png(path, mask.to_bytes()); }

Raster<std::uint8_t> to_viewable(const GrayImage& plane) {
  const auto px = plane.pixels();
  const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  Raster<std::uint8_t> out(plane.width(), plane.height());
  for (std::size_t i = 0; i < plane.size(); ++i)
    out[i] = span > 0.0 ? static_cast<std::uint8_t>(std::lround(255.0 * (plane[i] - lo) / span)) : 0;
  return out;
}

}  // namespace fzsg::io
