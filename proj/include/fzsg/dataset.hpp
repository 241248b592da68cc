#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fzsg/features.hpp"
#include "fzsg/training_set.hpp"

namespace fzsg::dataset {

/// PNG and JPEG files of a directory, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Label map of an image: <stem>_labels.png, else <stem>.png, in labels_dir.
std::optional<std::filesystem::path> find_label_map(const std::filesystem::path& labels_dir, const std::string& stem);

/// Nearest-neighbour resampling of a label map (codes must not be blended).
Raster<std::uint8_t> resize_labels(const Raster<std::uint8_t>& labels, int width, int height);

struct ImageSamples {
  std::string image;
  std::array<std::size_t, kClassCount> counts{};
};

struct Corpus {
  TrainingSet set;
  std::vector<ImageSamples> images;
  std::vector<std::string> skipped;  // images without a label map or with no labelled pixels
};

/// Samples every labelled image of images_dir at the working width used for
/// segmentation. Throws empty_input if no labelled pixel is found.
Corpus collect(const std::filesystem::path& images_dir, const std::filesystem::path& labels_dir, int working_width,
               const features::FeatureOptions& opts);

}  // namespace fzsg::dataset
