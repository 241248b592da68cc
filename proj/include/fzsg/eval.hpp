#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fzsg/image.hpp"

namespace fzsg::eval {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

struct Metrics {
  double accuracy = 0.0;
  double dice = 0.0;
  double jaccard = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  // Names of the metrics that were 0/0 and reported as 1.
  std::vector<std::string> degenerate;
};

Metrics metrics(const ConfusionCounts& c);

struct ImageRow {
  std::string image;
  Metrics m;
};

struct DatasetReport {
  std::vector<ImageRow> rows;
  Metrics mean;  // unweighted per-image mean
  std::vector<std::string> errors;
};

/// Ground-truth file name for an image stem.
std::string ground_truth_name(const std::string& stem);

/// Image stem of a prediction file: extension and a trailing "_Segmentation" removed.
std::string prediction_stem(const std::filesystem::path& pred);

/// Scores every PNG in pred_dir against gt_dir/<stem>_Segmentation.png.
/// Missing or unreadable ground truths go to `errors` and are excluded from the mean.
DatasetReport evaluate_dataset(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                               int threads = 1);

std::string to_csv(const DatasetReport& report);

/// Reference tuple reported on the 2016 challenge test set, for comparison only.
inline constexpr std::array<double, 5> kReferenceMetrics{0.934, 0.869, 0.791, 0.870, 0.978};

std::string reference_line();

}  // namespace fzsg::eval
