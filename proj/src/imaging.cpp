#include "fzsg/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace fzsg::imaging {

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

// Per-output taps of a 1-D resampling pass.
struct Taps {
  std::vector<std::size_t> begin;  // offset into index/weight, size out + 1
  std::vector<int> index;
  std::vector<double> weight;
};

Taps make_taps(int in, int out) {
  const double scale = static_cast<double>(out) / static_cast<double>(in);
  const double kscale = scale < 1.0 ? scale : 1.0;
  const double support = 2.0 / kscale;
  Taps taps;
  taps.begin.reserve(static_cast<std::size_t>(out) + 1);
  for (int o = 0; o < out; ++o) {
    taps.begin.push_back(taps.index.size());
    const double center = (o + 0.5) / scale - 0.5;
    const int lo = static_cast<int>(std::ceil(center - support));
    const int hi = static_cast<int>(std::floor(center + support));
    const std::size_t first = taps.weight.size();
    double sum = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double w = cubic_weight((center - i) * kscale);
      if (w == 0.0) continue;
      taps.index.push_back(std::clamp(i, 0, in - 1));
      taps.weight.push_back(w);
      sum += w;
    }
    for (std::size_t k = first; k < taps.weight.size(); ++k) taps.weight[k] /= sum;
  }
  taps.begin.push_back(taps.index.size());
  return taps;
}

// Separable resample of `channels` interleaved channels. Horizontal pass first,
// into a real-valued buffer; the vertical pass hands each value to `sink`.
template <typename Source, typename Sink>
void resample_channels(int in_w, int in_h, int channels, Source source, int out_w, int out_h, Sink sink) {
  const Taps hx = make_taps(in_w, out_w);
  const Taps vy = make_taps(in_h, out_h);
  const std::size_t ch = static_cast<std::size_t>(channels);
  std::vector<double> mid(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(in_h) * ch);
  for (int y = 0; y < in_h; ++y) {
    const std::size_t row_in = static_cast<std::size_t>(y) * static_cast<std::size_t>(in_w);
    const std::size_t row_mid = static_cast<std::size_t>(y) * static_cast<std::size_t>(out_w);
    for (int x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t k = hx.begin[x]; k < hx.begin[x + 1]; ++k)
          acc += hx.weight[k] * source((row_in + static_cast<std::size_t>(hx.index[k])) * ch + c);
        mid[(row_mid + static_cast<std::size_t>(x)) * ch + c] = acc;
      }
    }
  }
  std::vector<double> acc(static_cast<std::size_t>(out_w) * ch);
  for (int y = 0; y < out_h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = vy.begin[y]; k < vy.begin[y + 1]; ++k) {
      const double w = vy.weight[k];
      const double* src = mid.data() + static_cast<std::size_t>(vy.index[k]) * static_cast<std::size_t>(out_w) * ch;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * src[i];
    }
    const std::size_t row_out = static_cast<std::size_t>(y) * static_cast<std::size_t>(out_w) * ch;
    for (std::size_t i = 0; i < acc.size(); ++i) sink(row_out + i, acc[i]);
  }
}

}  // namespace

GrayImage resample(const GrayImage& src, int out_width, int out_height) {
  require(src.width() >= 1 && src.height() >= 1, ErrorCode::invalid_image, "resample: empty image");
  require(out_width >= 1 && out_height >= 1, ErrorCode::invalid_argument, "resample: bad target size");
  GrayImage out(out_width, out_height);
  resample_channels(
      src.width(), src.height(), 1, [&](std::size_t i) { return src[i]; }, out_width, out_height,
      [&](std::size_t i, double v) { out[i] = v; });
  return out;
}

RgbImage resize_bicubic(const RgbImage& img, int target_width) {
  require(img.width() >= 1 && img.height() >= 1, ErrorCode::invalid_image, "resize: degenerate input image");
  require(target_width >= 2, ErrorCode::invalid_argument, "resize: target width must be >= 2");
  const double ratio = static_cast<double>(target_width) / static_cast<double>(img.width());
  const int target_height = std::max(1, static_cast<int>(std::lround(img.height() * ratio)));
  if (target_width == img.width() && target_height == img.height()) return img;

  RgbImage out(target_width, target_height);
  const auto in = img.bytes();
  auto dst = out.bytes();
  resample_channels(
      img.width(), img.height(), 3, [&](std::size_t i) { return static_cast<double>(in[i]); }, target_width,
      target_height, [&](std::size_t i, double v) {
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      });
  return out;
}

BinaryMask upsize_mask(const BinaryMask& mask, int orig_width, int orig_height) {
  require(mask.size() > 0, ErrorCode::invalid_image, "upsize_mask: empty mask");
  require(orig_width >= 1 && orig_height >= 1, ErrorCode::invalid_argument, "upsize_mask: bad target size");
  if (mask.width() == orig_width && mask.height() == orig_height) return mask;
  BinaryMask out(orig_width, orig_height);
  resample_channels(
      mask.width(), mask.height(), 1, [&](std::size_t i) { return mask[i] ? 255.0 : 0.0; }, orig_width, orig_height,
      [&](std::size_t i, double v) { out.set(i, v > 127.5); });
  return out;
}

GrayImage to_gray(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Rgb p = img.pixel(i);
    out[i] = (static_cast<double>(p.r) + static_cast<double>(p.g) + static_cast<double>(p.b)) / 3.0;
  }
  return out;
}

namespace {

double srgb_to_linear(double c) {
  c /= 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

// sRGB primaries, D65 white.
constexpr std::array<std::array<double, 3>, 3> kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

std::array<double, 3> white_point() {
  std::array<double, 3> w{};
  for (std::size_t r = 0; r < 3; ++r) w[r] = kRgbToXyz[r][0] + kRgbToXyz[r][1] + kRgbToXyz[r][2];
  return w;
}

const std::array<double, 256>& linear_lut() {
  static const std::array<double, 256> lut = [] {
    std::array<double, 256> t{};
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = srgb_to_linear(static_cast<double>(i));
    return t;
  }();
  return lut;
}

std::array<double, 3> to_xyz(Rgb p) {
  const auto& lut = linear_lut();
  const std::array<double, 3> lin{lut[p.r], lut[p.g], lut[p.b]};
  std::array<double, 3> xyz{};
  for (std::size_t r = 0; r < 3; ++r)
    xyz[r] = kRgbToXyz[r][0] * lin[0] + kRgbToXyz[r][1] * lin[1] + kRgbToXyz[r][2] * lin[2];
  return xyz;
}

double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

std::array<double, 3> to_hsv(Rgb p) {
  const double r = p.r, g = p.g, b = p.b;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = (g - b) / delta;
      if (h < 0.0) h += 6.0;
    } else if (mx == g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
    h /= 6.0;
    if (h >= 1.0) h -= 1.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx / 255.0};
}

}  // namespace

MultiChannelImage convert_color(const RgbImage& img, ColorSpace space) {
  MultiChannelImage out;
  for (int c = 0; c < 3; ++c) out.planes.emplace_back(img.width(), img.height());
  const auto white = white_point();
  const double white_den = white[0] + 15.0 * white[1] + 3.0 * white[2];
  const double un = 4.0 * white[0] / white_den;
  const double vn = 9.0 * white[1] / white_den;

  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const Rgb p = img.pixel(i);
    std::array<double, 3> v{};
    switch (space) {
      case ColorSpace::rgb:
        v = {static_cast<double>(p.r), static_cast<double>(p.g), static_cast<double>(p.b)};
        break;
      case ColorSpace::rgb_norm: {
        const double sum = static_cast<double>(p.r) + p.g + p.b;
        if (sum == 0.0)
          v = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        else
          v = {p.r / sum, p.g / sum, p.b / sum};
        break;
      }
      case ColorSpace::hsv:
        v = to_hsv(p);
        break;
      case ColorSpace::ciexyz:
        v = to_xyz(p);
        break;
      case ColorSpace::cielab: {
        const auto xyz = to_xyz(p);
        const double fx = lab_f(xyz[0] / white[0]);
        const double fy = lab_f(xyz[1] / white[1]);
        const double fz = lab_f(xyz[2] / white[2]);
        v = {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
        break;
      }
      case ColorSpace::cieluv: {
        const auto xyz = to_xyz(p);
        const double l = 116.0 * lab_f(xyz[1] / white[1]) - 16.0;
        const double den = xyz[0] + 15.0 * xyz[1] + 3.0 * xyz[2];
        const double up = den > 0.0 ? 4.0 * xyz[0] / den : un;
        const double vp = den > 0.0 ? 9.0 * xyz[1] / den : vn;
        v = {l, 13.0 * l * (up - un), 13.0 * l * (vp - vn)};
        break;
      }
    }
    for (std::size_t c = 0; c < 3; ++c) out.planes[c][i] = v[c];
  }

  switch (space) {
    case ColorSpace::rgb: out.names = {"R", "G", "B"}; break;
    case ColorSpace::rgb_norm: out.names = {"r_norm", "g_norm", "b_norm"}; break;
    case ColorSpace::hsv: out.names = {"H", "S", "V"}; break;
    case ColorSpace::ciexyz: out.names = {"X", "Y", "Z"}; break;
    case ColorSpace::cielab: out.names = {"Lab_L", "Lab_a", "Lab_b"}; break;
    case ColorSpace::cieluv: out.names = {"Luv_L", "Luv_u", "Luv_v"}; break;
  }
  return out;
}

RgbImage median_filter(const RgbImage& img, int window) {
  require(window >= 3 && window % 2 == 1, ErrorCode::invalid_argument, "median_filter: window must be odd and >= 3");
  const int r = window / 2;
  const int w = img.width();
  const int h = img.height();
  const int half = (window * window - 1) / 2;
  RgbImage out(w, h);

  auto sample = [&](int x, int y, int c) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return img.channel(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x), c);
  };

  // Sliding histogram per row; `med` tracks the median with `below` = count(< med).
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      std::array<int, 256> hist{};
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) ++hist[sample(dx, y + dy, c)];
      int med = 0;
      int below = 0;
      auto settle = [&] {
        while (below > half) {
          --med;
          below -= hist[static_cast<std::size_t>(med)];
        }
        while (below + hist[static_cast<std::size_t>(med)] <= half) {
          below += hist[static_cast<std::size_t>(med)];
          ++med;
        }
      };
      settle();
      for (int x = 0;; ++x) {
        auto px = out.pixel(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x));
        const auto m = static_cast<std::uint8_t>(med);
        if (c == 0) px.r = m;
        else if (c == 1) px.g = m;
        else px.b = m;
        out.set(x, y, px);
        if (x + 1 == w) break;
        for (int dy = -r; dy <= r; ++dy) {
          const int gone = sample(x - r, y + dy, c);
          const int come = sample(x + r + 1, y + dy, c);
          --hist[static_cast<std::size_t>(gone)];
          if (gone < med) --below;
          ++hist[static_cast<std::size_t>(come)];
          if (come < med) ++below;
        }
        settle();
      }
    }
  }
  return out;
}

}  // namespace fzsg::imaging
