#include "fzsg/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>

#include "fzsg/imaging.hpp"
#include "fzsg/parallel.hpp"

namespace fzsg::features {

std::vector<double> gaussian_kernel(double sigma) {
  require(sigma > 0.0, ErrorCode::invalid_argument, "gaussian sigma must be positive");
  const int hw = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * static_cast<std::size_t>(hw) + 1);
  double sum = 0.0;
  for (int i = -hw; i <= hw; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + hw)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

GrayImage gaussian_blur(const GrayImage& gray, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int hw = static_cast<int>(k.size() / 2);
  const int w = gray.width();
  const int h = gray.height();
  GrayImage tmp(w, h);
  std::vector<double> line(static_cast<std::size_t>(w + 2 * hw));
  for (int y = 0; y < h; ++y) {
    for (int x = -hw; x < w + hw; ++x) line[static_cast<std::size_t>(x + hw)] = gray.clamped(x, y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k.size(); ++t) acc += k[t] * line[static_cast<std::size_t>(x) + t];
      tmp.at(x, y) = acc;
    }
  }
  GrayImage out(w, h);
  std::vector<double> acc(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int t = -hw; t <= hw; ++t) {
      const auto src = tmp.row(std::clamp(y + t, 0, h - 1));
      const double kw = k[static_cast<std::size_t>(t + hw)];
      for (int x = 0; x < w; ++x) acc[static_cast<std::size_t>(x)] += kw * src[static_cast<std::size_t>(x)];
    }
    std::copy(acc.begin(), acc.end(), out.row(y).begin());
  }
  return out;
}

ScaleSpace build_scale_space(const GrayImage& gray) {
  ScaleSpace ss;
  for (double s : ss.sigmas) ss.planes.push_back(gaussian_blur(gray, s));
  return ss;
}

GrayImage sobel_magnitude(const GrayImage& p) {
  GrayImage out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      const double tl = p.clamped(x - 1, y - 1), tc = p.clamped(x, y - 1), tr = p.clamped(x + 1, y - 1);
      const double ml = p.clamped(x - 1, y), mr = p.clamped(x + 1, y);
      const double bl = p.clamped(x - 1, y + 1), bc = p.clamped(x, y + 1), br = p.clamped(x + 1, y + 1);
      const double gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      const double gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
      out.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

GrayImage dog(const ScaleSpace& ss, int i, int j) {
  const int n = static_cast<int>(ss.planes.size());
  require(i > j && j >= 0 && i < n, ErrorCode::invalid_argument, "dog: requires i > j within the scale space");
  const GrayImage& a = ss.planes[static_cast<std::size_t>(i)];
  const GrayImage& b = ss.planes[static_cast<std::size_t>(j)];
  GrayImage out(a.width(), a.height());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] - b[k];
  return out;
}

GrayImage laplacian(const GrayImage& p) {
  GrayImage out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x)
      out.at(x, y) = p.clamped(x - 1, y) + p.clamped(x + 1, y) + p.clamped(x, y - 1) + p.clamped(x, y + 1) -
                     4.0 * p.at(x, y);
  return out;
}

std::array<GrayImage, 8> hessian_features(const GrayImage& p) {
  const int w = p.width();
  const int h = p.height();
  std::array<GrayImage, 8> out;
  for (auto& plane : out) plane = GrayImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = p.at(x, y);
      const double ixx = p.clamped(x + 1, y) - 2.0 * c + p.clamped(x - 1, y);
      const double iyy = p.clamped(x, y + 1) - 2.0 * c + p.clamped(x, y - 1);
      const double ixy = (p.clamped(x + 1, y + 1) - p.clamped(x + 1, y - 1) - p.clamped(x - 1, y + 1) +
                          p.clamped(x - 1, y - 1)) /
                         4.0;
      const double trace = ixx + iyy;
      const double half_diff = (ixx - iyy) / 2.0;
      const double root = std::sqrt(half_diff * half_diff + ixy * ixy);
      const double l1 = trace / 2.0 + root;
      const double l2 = trace / 2.0 - root;
      out[0].at(x, y) = trace;
      out[1].at(x, y) = ixx * iyy - ixy * ixy;
      out[2].at(x, y) = std::sqrt(ixx * ixx + 2.0 * ixy * ixy + iyy * iyy);
      out[3].at(x, y) = l1;
      out[4].at(x, y) = l2;
      out[5].at(x, y) = 0.5 * std::atan2(2.0 * ixy, ixx - iyy);
      out[6].at(x, y) = l1 - l2;
      out[7].at(x, y) = (l1 - l2) * (l1 - l2);
    }
  }
  return out;
}

namespace {

// Order-statistic counter over value ranks: O(1) update, O(sqrt D) select.
class RankCounter {
 public:
  explicit RankCounter(std::size_t distinct)
      : block_(std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(distinct))))),
        counts_(distinct, 0),
        blocks_(distinct / block_ + 1, 0) {}

  void add(std::uint32_t r) {
    ++counts_[r];
    ++blocks_[r / block_];
  }
  void remove(std::uint32_t r) {
    --counts_[r];
    --blocks_[r / block_];
  }
  // Rank of the k-th smallest element (0-based).
  std::uint32_t select(std::size_t k) const {
    std::size_t b = 0;
    while (blocks_[b] <= k) k -= blocks_[b++];
    std::size_t r = b * block_;
    while (counts_[r] <= k) k -= counts_[r++];
    return static_cast<std::uint32_t>(r);
  }

 private:
  std::size_t block_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> blocks_;
};

}  // namespace

LocalStats local_statistics(const GrayImage& plane, int radius) {
  require(radius >= 1, ErrorCode::invalid_argument, "local_statistics: radius must be >= 1");
  const int w = plane.width();
  const int h = plane.height();
  std::vector<int> span(2 * static_cast<std::size_t>(radius) + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    int hw = 0;
    while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius) ++hw;
    span[static_cast<std::size_t>(dy + radius)] = hw;
  }

  LocalStats s{GrayImage(w, h), GrayImage(w, h), GrayImage(w, h), GrayImage(w, h), GrayImage(w, h)};

  // Mean, variance, min, max: direct disk scan in row-major order.
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius);
    const int y1 = std::min(h - 1, y + radius);
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      std::size_t n = 0;
      for (int yy = y0; yy <= y1; ++yy) {
        const int hw = span[static_cast<std::size_t>(yy - y + radius)];
        const int x0 = std::max(0, x - hw);
        const int x1 = std::min(w - 1, x + hw);
        const auto row = plane.row(yy);
        for (int xx = x0; xx <= x1; ++xx) {
          const double v = row[static_cast<std::size_t>(xx)];
          sum += v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        n += static_cast<std::size_t>(x1 - x0 + 1);
      }
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (int yy = y0; yy <= y1; ++yy) {
        const int hw = span[static_cast<std::size_t>(yy - y + radius)];
        const int x0 = std::max(0, x - hw);
        const int x1 = std::min(w - 1, x + hw);
        const auto row = plane.row(yy);
        for (int xx = x0; xx <= x1; ++xx) {
          const double d = row[static_cast<std::size_t>(xx)] - mean;
          ss += d * d;
        }
      }
      s.mean.at(x, y) = mean;
      s.variance.at(x, y) = ss / static_cast<double>(n);
      s.minimum.at(x, y) = lo;
      s.maximum.at(x, y) = hi;
    }
  }

  // Median: sliding disk over value ranks.
  std::vector<double> distinct(plane.pixels().begin(), plane.pixels().end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::uint32_t> rank(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i)
    rank[i] = static_cast<std::uint32_t>(std::lower_bound(distinct.begin(), distinct.end(), plane[i]) - distinct.begin());
  auto rank_at = [&](int x, int y) {
    return rank[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
  };

  for (int y = 0; y < h; ++y) {
    RankCounter counter(distinct.size());
    std::size_t n = 0;
    const int y0 = std::max(0, y - radius);
    const int y1 = std::min(h - 1, y + radius);
    for (int yy = y0; yy <= y1; ++yy) {
      const int hw = span[static_cast<std::size_t>(yy - y + radius)];
      for (int xx = 0; xx <= std::min(w - 1, hw); ++xx) {
        counter.add(rank_at(xx, yy));
        ++n;
      }
    }
    for (int x = 0;; ++x) {
      s.median.at(x, y) = distinct[counter.select((n - 1) / 2)];
      if (x + 1 == w) break;
      for (int yy = y0; yy <= y1; ++yy) {
        const int hw = span[static_cast<std::size_t>(yy - y + radius)];
        const int gone = x - hw;
        const int come = x + 1 + hw;
        if (gone >= 0) {
          counter.remove(rank_at(gone, yy));
          --n;
        }
        if (come < w) {
          counter.add(rank_at(come, yy));
          ++n;
        }
      }
    }
  }
  return s;
}

std::vector<GaborParams> default_gabor_bank() {
  std::vector<GaborParams> bank;
  const double pi = std::numbers::pi;
  for (int t = 0; t < 4; ++t) {
    for (int k = 0; k < 11; ++k) {
      const double lambda = 2.0 * std::sqrt(2.0) * std::pow(std::sqrt(2.0), k);
      bank.push_back({lambda, t * pi / 4.0, 0.0, 0.56 * lambda, 0.5});
    }
  }
  return bank;
}

namespace {

int gabor_half_width(const GaborParams& p) { return static_cast<int>(std::ceil(3.0 * p.sigma)); }

double gabor_value(const GaborParams& p, int x, int y) {
  const double ct = std::cos(p.orientation);
  const double st = std::sin(p.orientation);
  const double xr = x * ct + y * st;
  const double yr = -x * st + y * ct;
  const double env = std::exp(-(xr * xr + p.aspect * p.aspect * yr * yr) / (2.0 * p.sigma * p.sigma));
  return env * std::cos(2.0 * std::numbers::pi * xr / p.wavelength + p.phase);
}

// Smallest n' >= n whose only prime factors are 2, 3, 5, 7.
int fft_friendly(int n) {
  for (int m = n;; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

}  // namespace

GrayImage gabor_kernel(const GaborParams& p) {
  require(p.wavelength > 0.0 && p.sigma > 0.0 && p.aspect > 0.0, ErrorCode::invalid_argument,
          "gabor parameters must be positive");
  const int hw = gabor_half_width(p);
  GrayImage k(2 * hw + 1, 2 * hw + 1);
  for (int y = -hw; y <= hw; ++y)
    for (int x = -hw; x <= hw; ++x) k.at(x + hw, y + hw) = gabor_value(p, x, y);
  return k;
}

std::vector<GrayImage> gabor_responses(const GrayImage& gray, std::span<const GaborParams> bank) {
  std::vector<GrayImage> kernels;
  int pad = 0;
  for (const auto& p : bank) {
    kernels.push_back(gabor_kernel(p));
    pad = std::max(pad, gabor_half_width(p));
  }
  const int w = gray.width();
  const int h = gray.height();
  const int pw = fft_friendly(w + 2 * pad);
  const int ph = fft_friendly(h + 2 * pad);
  const std::size_t nreal = static_cast<std::size_t>(pw) * static_cast<std::size_t>(ph);
  const std::size_t ncplx = static_cast<std::size_t>(ph) * static_cast<std::size_t>(pw / 2 + 1);

  auto real = fftw_buffer<double>(nreal);
  auto image_spec = fftw_buffer<fftw_complex>(ncplx);
  auto kernel_spec = fftw_buffer<fftw_complex>(ncplx);
  fftw_plan forward{};
  fftw_plan inverse{};
  {
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_r2c_2d(ph, pw, real.get(), image_spec.get(), FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_2d(ph, pw, kernel_spec.get(), real.get(), FFTW_ESTIMATE);
  }

  // Edge-replicated image placed with its origin at (pad, pad).
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      real[static_cast<std::size_t>(y) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(x)] =
          gray.clamped(x - pad, y - pad);
  fftw_execute_dft_r2c(forward, real.get(), image_spec.get());

  std::vector<GrayImage> out;
  out.reserve(bank.size());
  const double norm = 1.0 / static_cast<double>(nreal);
  for (const auto& k : kernels) {
    const int hw = k.width() / 2;
    std::fill(real.get(), real.get() + nreal, 0.0);
    for (int dy = -hw; dy <= hw; ++dy)
      for (int dx = -hw; dx <= hw; ++dx) {
        const int yy = (dy + ph) % ph;
        const int xx = (dx + pw) % pw;
        real[static_cast<std::size_t>(yy) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(xx)] =
            k.at(dx + hw, dy + hw);
      }
    fftw_execute_dft_r2c(forward, real.get(), kernel_spec.get());
    for (std::size_t i = 0; i < ncplx; ++i) {
      const double ar = image_spec[i][0], ai = image_spec[i][1];
      const double br = kernel_spec[i][0], bi = kernel_spec[i][1];
      kernel_spec[i][0] = ar * br - ai * bi;
      kernel_spec[i][1] = ar * bi + ai * br;
    }
    fftw_execute_dft_c2r(inverse, kernel_spec.get(), real.get());
    GrayImage resp(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        resp.at(x, y) =
            real[static_cast<std::size_t>(y + pad) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(x + pad)] *
            norm;
    out.push_back(std::move(resp));
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }
  return out;
}

std::vector<GrayImage> gabor_bank(const GrayImage& gray, std::span<const GaborParams> bank) {
  require(bank.size() == 44, ErrorCode::invalid_argument, "gabor bank must hold exactly 44 filters");
  return gabor_responses(gray, bank);
}

namespace {

std::string scale_tag(double s) { return "s" + std::to_string(static_cast<int>(s)); }

const std::array<const char*, 8> kHessianNames{"trace", "det", "module", "lambda1", "lambda2", "orientation",
                                               "eigdiff", "eigdiff_sq"};
const std::array<const char*, 5> kStatNames{"mean", "variance", "median", "min", "max"};

}  // namespace

std::vector<std::string> feature_names(const FeatureOptions& opts) {
  std::vector<std::string> n;
  n.push_back("gray");
  if (opts.normalized_rgb) {
    n.insert(n.end(), {"r_norm", "g_norm", "b_norm"});
  } else {
    n.insert(n.end(), {"R", "G", "B"});
  }
  n.insert(n.end(), {"H", "S", "V", "X", "Y", "Z", "Lab_L", "Lab_a", "Lab_b", "Luv_L", "Luv_u", "Luv_v"});
  for (double s : kScales) n.push_back("blur_" + scale_tag(s));
  n.push_back("sobel_gray");
  for (double s : kScales) n.push_back("sobel_" + scale_tag(s));
  for (std::size_t i = 1; i < kScaleCount; ++i)
    for (std::size_t j = 0; j < i; ++j) n.push_back("dog_" + scale_tag(kScales[i]) + "_" + scale_tag(kScales[j]));
  for (double s : kScales) n.push_back("laplacian_" + scale_tag(s));
  for (const char* f : kHessianNames) n.push_back(std::string("hessian_") + f + "_gray");
  for (double s : kScales)
    for (const char* f : kHessianNames) n.push_back(std::string("hessian_") + f + "_" + scale_tag(s));
  for (double s : kScales)
    for (const char* f : kStatNames) n.push_back(std::string("stat_") + f + "_r" + std::to_string(static_cast<int>(s)));
  for (const auto& g : default_gabor_bank()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "gabor_l%.3f_t%.3f", g.wavelength, g.orientation);
    n.emplace_back(buf);
  }
  return n;
}

FeatureStack::FeatureStack(int width, int height, std::vector<std::string> names)
    : width_(width), height_(height), names_(std::move(names)) {
  require(width >= 1 && height >= 1, ErrorCode::invalid_image, "feature stack dimensions must be positive");
  data_.assign(pixel_count() * names_.size(), 0.0f);
}

GrayImage FeatureStack::plane(std::size_t k) const {
  require(k < names_.size(), ErrorCode::invalid_argument, "feature plane index out of range");
  GrayImage out(width_, height_);
  for (std::size_t i = 0; i < pixel_count(); ++i) out[i] = data_[i * names_.size() + k];
  return out;
}

void FeatureStack::set_plane(std::size_t k, const GrayImage& plane) {
  require(k < names_.size(), ErrorCode::invalid_argument, "feature plane index out of range");
  require(plane.width() == width_ && plane.height() == height_, ErrorCode::dimension_mismatch,
          "feature plane size mismatch");
  for (std::size_t i = 0; i < pixel_count(); ++i) data_[i * names_.size() + k] = static_cast<float>(plane[i]);
}

FeatureStack extract_features(const RgbImage& img, const FeatureOptions& opts) {
  using imaging::ColorSpace;
  FeatureStack stack(img.width(), img.height(), feature_names(opts));
  const GrayImage gray = imaging::to_gray(img);
  const ScaleSpace ss = build_scale_space(gray);

  // Plane offsets of each group in the fixed layout.
  constexpr std::size_t kBlur = 16, kSobel = 21, kDog = 27, kLap = 37, kHess = 42, kStat = 90, kGabor = 115;
  static_assert(kGabor + 44 == kFeatureCount);

  // Independent groups; each writes only its own planes.
  const std::vector<std::function<void()>> jobs{
      [&] {
        stack.set_plane(0, gray);
        std::size_t k = 1;
        const std::array<ColorSpace, 5> spaces{opts.normalized_rgb ? ColorSpace::rgb_norm : ColorSpace::rgb,
                                               ColorSpace::hsv, ColorSpace::ciexyz, ColorSpace::cielab,
                                               ColorSpace::cieluv};
        for (auto sp : spaces)
          for (const auto& p : imaging::convert_color(img, sp).planes) stack.set_plane(k++, p);
      },
      [&] {
        for (std::size_t m = 0; m < kScaleCount; ++m) stack.set_plane(kBlur + m, ss.planes[m]);
        stack.set_plane(kSobel, sobel_magnitude(gray));
        for (std::size_t m = 0; m < kScaleCount; ++m) stack.set_plane(kSobel + 1 + m, sobel_magnitude(ss.planes[m]));
        std::size_t k = kDog;
        for (int i = 1; i < static_cast<int>(kScaleCount); ++i)
          for (int j = 0; j < i; ++j) stack.set_plane(k++, dog(ss, i, j));
        for (std::size_t m = 0; m < kScaleCount; ++m) stack.set_plane(kLap + m, laplacian(ss.planes[m]));
      },
      [&] {
        std::size_t k = kHess;
        for (const auto& p : hessian_features(gray)) stack.set_plane(k++, p);
        for (const auto& plane : ss.planes)
          for (const auto& p : hessian_features(plane)) stack.set_plane(k++, p);
      },
      [&] {
        std::size_t k = kStat;
        for (double s : kScales) {
          const auto st = local_statistics(gray, static_cast<int>(s));
          for (const GrayImage* p : {&st.mean, &st.variance, &st.median, &st.minimum, &st.maximum})
            stack.set_plane(k++, *p);
        }
      },
      [&] {
        const auto bank = default_gabor_bank();
        std::size_t k = kGabor;
        for (const auto& p : gabor_bank(gray, bank)) stack.set_plane(k++, p);
      },
  };
  parallel_for(jobs.size(), opts.threads, [&](std::size_t i) { jobs[i](); });
  return stack;
}

TrainingSet sample_pixels(const FeatureStack& stack, const Raster<std::uint8_t>& labels) {
  require(labels.width() == stack.width() && labels.height() == stack.height(), ErrorCode::dimension_mismatch,
          "label map and image differ in size");
  TrainingSet set;
  set.fingerprint = stack.names();
  set.width = stack.plane_count();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint8_t code = labels[i];
    if (code == kUnlabeled) continue;
    require(code <= kOther, ErrorCode::invalid_argument, "label map holds an unknown class code");
    set.append(stack.row(i), static_cast<PixelClass>(code - 1));
  }
  require(set.size() > 0, ErrorCode::empty_input, "label map has no labelled pixels");
  return set;
}

TrainingSet sample_pixels(const RgbImage& img, const Raster<std::uint8_t>& labels, const FeatureOptions& opts) {
  require(labels.width() == img.width() && labels.height() == img.height(), ErrorCode::dimension_mismatch,
          "label map and image differ in size");
  return sample_pixels(extract_features(img, opts), labels);
}

}  // namespace fzsg::features
