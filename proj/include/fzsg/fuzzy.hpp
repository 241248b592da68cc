#pragma once

#include <cstdint>
#include <vector>

#include "fzsg/features.hpp"
#include "fzsg/forest.hpp"
#include "fzsg/image.hpp"

namespace fzsg::fuzzy {

/// Membership planes for lesion, skin and other; they sum to 1 at every pixel.
struct FuzzyPartition {
  GrayImage lesion;
  GrayImage skin;
  GrayImage other;

  int width() const { return lesion.width(); }
  int height() const { return lesion.height(); }
  const GrayImage& plane(PixelClass c) const;

  /// Largest |mu_l + mu_s + mu_o - 1| over the image.
  double max_sum_error() const;
  /// Classes whose plane is identically zero (a warning, not an error).
  std::vector<PixelClass> null_classes() const;
};

/// Builds a partition from three planes, validating shape, range and sums.
FuzzyPartition make_partition(GrayImage lesion, GrayImage skin, GrayImage other);

/// Runs the forest over every pixel of the stack.
FuzzyPartition classify_image(const forest::ForestModel& model, const features::FeatureStack& stack, int threads = 1);

struct ProbabilityImages {
  Raster<std::uint8_t> lesion;
  Raster<std::uint8_t> skin;
  Raster<std::uint8_t> other;
  RgbImage composite;  // (R, G, B) = (lesion, skin, other)
};

/// Quantises one pixel: round(255 mu) per class, then the class with the
/// largest mu (ties: lesion, skin, other) absorbs the difference to 255.
std::array<std::uint8_t, 3> quantize(double lesion, double skin, double other);

ProbabilityImages probability_images(const FuzzyPartition& p);

/// Pixels whose membership in `cls` is >= alpha.
BinaryMask alpha_cut(const FuzzyPartition& p, PixelClass cls, double alpha);

}  // namespace fzsg::fuzzy
