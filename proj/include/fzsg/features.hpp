#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fzsg/image.hpp"
#include "fzsg/training_set.hpp"

namespace fzsg::features {

inline constexpr std::size_t kFeatureCount = 159;
inline constexpr std::size_t kScaleCount = 5;
inline constexpr std::array<double, kScaleCount> kScales{1.0, 2.0, 4.0, 8.0, 16.0};
inline constexpr const char* kLayoutVersion = "fzsg-features-v1";

/// Normalised 1-D Gaussian taps over [-ceil(3 sigma), ceil(3 sigma)].
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur, edge-replicated border.
GrayImage gaussian_blur(const GrayImage& gray, double sigma);

struct ScaleSpace {
  std::array<double, kScaleCount> sigmas = kScales;
  std::vector<GrayImage> planes;
};

ScaleSpace build_scale_space(const GrayImage& gray);

/// |grad| from the 3x3 Sobel pair, edge-replicated.
GrayImage sobel_magnitude(const GrayImage& plane);

/// plane_i - plane_j; requires i > j.
GrayImage dog(const ScaleSpace& ss, int i, int j);

/// 4-neighbour Laplacian, edge-replicated.
GrayImage laplacian(const GrayImage& plane);

/// Central-difference Hessian features, in order: trace, determinant,
/// Frobenius module, larger eigenvalue, smaller eigenvalue, orientation,
/// eigenvalue difference, squared eigenvalue difference.
std::array<GrayImage, 8> hessian_features(const GrayImage& plane);

struct LocalStats {
  GrayImage mean;
  GrayImage variance;  // population
  GrayImage median;    // lower median for even counts
  GrayImage minimum;
  GrayImage maximum;
};

/// Statistics over the disk of `radius` around each pixel, clipped at the border.
LocalStats local_statistics(const GrayImage& plane, int radius);

struct GaborParams {
  double wavelength;   // lambda, pixels
  double orientation;  // theta, radians
  double phase;        // psi, radians
  double sigma;        // envelope, pixels
  double aspect;       // gamma
};

/// 4 orientations x 11 half-octave wavelengths from 2*sqrt(2) to 64*sqrt(2);
/// sigma = 0.56 lambda, gamma = 0.5, psi = 0.
std::vector<GaborParams> default_gabor_bank();

/// Real Gabor kernel sampled on [-ceil(3 sigma), ceil(3 sigma)]^2, row-major.
GrayImage gabor_kernel(const GaborParams& p);

/// Convolution of `gray` with each kernel of the bank (edge-replicated border).
/// The bank must hold exactly 44 entries.
std::vector<GrayImage> gabor_bank(const GrayImage& gray, std::span<const GaborParams> bank);

/// Same convolution for any bank size; used by gabor_bank.
std::vector<GrayImage> gabor_responses(const GrayImage& gray, std::span<const GaborParams> bank);

struct FeatureOptions {
  // Replace the raw R, G, B planes with normalised r, g, b. Changes the fingerprint.
  bool normalized_rgb = false;
  int threads = 1;
};

/// Ordered plane names; the model stores this list as its fingerprint.
std::vector<std::string> feature_names(const FeatureOptions& opts = {});

/// 159 aligned planes stored pixel-major so one pixel's vector is contiguous.
class FeatureStack {
 public:
  FeatureStack(int width, int height, std::vector<std::string> names);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
  std::size_t plane_count() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::span<const float> row(std::size_t pixel) const {
    return std::span<const float>(data_).subspan(pixel * names_.size(), names_.size());
  }
  GrayImage plane(std::size_t k) const;
  void set_plane(std::size_t k, const GrayImage& plane);

 private:
  int width_;
  int height_;
  std::vector<std::string> names_;
  std::vector<float> data_;
};

/// Full 159-plane layout: 16 colour, 5 blurred values, 6 Sobel, 10 DoG,
/// 5 Laplacian, 48 Hessian, 25 local statistics, 44 Gabor.
FeatureStack extract_features(const RgbImage& img, const FeatureOptions& opts = {});

/// Label codes in side-car label maps.
enum LabelCode : std::uint8_t { kUnlabeled = 0, kLesion = 1, kSkin = 2, kOther = 3 };

/// One row per labelled pixel (codes 1..3), in row-major pixel order.
TrainingSet sample_pixels(const FeatureStack& stack, const Raster<std::uint8_t>& labels);
TrainingSet sample_pixels(const RgbImage& img, const Raster<std::uint8_t>& labels, const FeatureOptions& opts = {});

}  // namespace fzsg::features
