#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fzsg/forest.hpp"
#include "fzsg/fuzzy.hpp"
#include "fzsg/image.hpp"

namespace fzsg::segmentation {

struct SegmentationConfig {
  double thr_other = 0.5;
  double thr_skin = 0.5;
  int working_width = 768;
  int erode_radius = 5;  // lesion/skin region erosions, and the L dilation/erosion of post-processing
  int median_window = 15;
  double interior_fraction = 3.0 / 8.0;
  int post_open_radius = 7;
  int post_close_radius = 9;
  int top_k_components = 3;
  // Below this fraction of lesion-cut pixels the image is treated as lesion-free.
  double min_lesion_fraction = 0.005;
  int threads = 1;

  /// Throws Error(invalid_argument) naming the first bad field.
  void validate() const;
};

using TraceImage = std::variant<RgbImage, Raster<std::uint8_t>, BinaryMask>;

struct TraceEntry {
  std::string name;
  TraceImage image;
};

/// Intermediate images plus the degraded-mode flags raised along the way.
struct SegmentationTrace {
  std::vector<TraceEntry> entries;
  std::vector<std::string> flags;
  int otsu_threshold = -1;
  std::array<std::uint8_t, 3> skin_color{};

  bool degraded() const { return !flags.empty(); }
  void add(std::string name, TraceImage img) { entries.push_back({std::move(name), std::move(img)}); }
  const TraceEntry* find(const std::string& name) const;
};

BinaryMask artifact_mask(const fuzzy::FuzzyPartition& p, double thr_other);

struct LesionSkinMask {
  BinaryMask mask;
  bool degraded = false;
  // complement, eroded, largest component, holes filled, eroded again
  std::vector<BinaryMask> stages;
};

/// Complement of the artifacts, eroded, largest 8-component, holes filled,
/// eroded again. Falls back to the plain complement if that empties.
LesionSkinMask lesion_skin_mask(const BinaryMask& artifacts, const SegmentationConfig& cfg);

struct SkinColor {
  Rgb color;
  bool fallback = false;  // skin cut was empty; whole-image median used
};

/// Per-channel lower median over the skin alpha-cut.
SkinColor skin_color(const RgbImage& img, const fuzzy::FuzzyPartition& p, double thr_skin);

struct Inpainted {
  RgbImage blurred;
  RgbImage for_thresholding;
};

Inpainted inpaint_for_thresholding(const RgbImage& img, const BinaryMask& artifacts, Rgb skin,
                                   const SegmentationConfig& cfg);

/// Otsu threshold of an 8-bit histogram: maximises the between-class variance
/// of {v <= t} vs {v > t}; smallest t on ties; a single-valued histogram
/// returns that value. Throws on an empty histogram.
int otsu_threshold(std::span<const std::uint64_t, 256> histogram);

/// Between-class variance w0 * w1 * (mu0 - mu1)^2 with weights as fractions of
/// the total, for classes {v <= t} and {v > t}. Zero if a class is empty.
double between_class_variance(std::uint64_t n, std::uint64_t w0, std::uint64_t s0, std::uint64_t s_total);

struct InitialMask {
  BinaryMask mask;
  int threshold = 0;
};

/// Otsu on the blue channel over `region`, then applied to the whole image:
/// foreground = blue <= t.
InitialMask initial_lesion_mask(const RgbImage& for_thresholding, const BinaryMask& region);

struct Postprocessed {
  BinaryMask mask;
  std::vector<std::string> flags;
  std::vector<TraceEntry> stages;
};

Postprocessed postprocess(const BinaryMask& mask, const fuzzy::FuzzyPartition& p, const SegmentationConfig& cfg);

struct SegmentResult {
  BinaryMask mask;  // original resolution
  SegmentationTrace trace;
};

/// Full pipeline: resize, features, fuzzy classification, artifact-aware
/// thresholding, post-processing, upsize. Intermediate images are kept only
/// when `keep_trace` is set; flags are always recorded.
SegmentResult segment(const RgbImage& img, const forest::ForestModel& model, const SegmentationConfig& cfg,
                      bool keep_trace = false);

/// Working-resolution fuzzy partition of an image, as used by `segment`.
fuzzy::FuzzyPartition classify(const RgbImage& working, const forest::ForestModel& model, int threads = 1);

/// Feature options implied by a model's fingerprint.
features::FeatureOptions feature_options_for(const forest::ForestModel& model, int threads = 1);

/// Boundary of `mask` drawn in green over `img`.
RgbImage overlay(const RgbImage& img, const BinaryMask& mask);

}  // namespace fzsg::segmentation
