#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fzsg/training_set.hpp"

namespace fzsg::forest {

inline constexpr std::uint16_t kFormatVersion = 1;

struct ForestParams {
  int n_trees = 100;
  int features_per_split = 13;
  std::uint64_t seed = 1;
  int threads = 1;
};

using ClassCounts = std::array<std::uint64_t, kClassCount>;
using Probabilities = std::array<double, kClassCount>;

/// Binary decision tree; nodes in preorder, so an internal node's left child
/// is always the next node.
struct Tree {
  struct Node {
    bool leaf = false;
    std::uint16_t feature = 0;
    double threshold = 0.0;  // x[feature] <= threshold goes left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    ClassCounts counts{};  // leaves only
  };
  std::vector<Node> nodes;

  /// Class-frequency distribution of the leaf reached by x.
  Probabilities leaf_distribution(std::span<const float> x) const;
  std::size_t depth() const;
};

class ForestModel {
 public:
  ForestModel(std::vector<Tree> trees, int features_per_split, std::vector<std::string> fingerprint);

  const std::vector<Tree>& trees() const noexcept { return trees_; }
  int features_per_split() const noexcept { return features_per_split_; }
  const std::vector<std::string>& fingerprint() const noexcept { return fingerprint_; }
  std::size_t feature_count() const noexcept { return fingerprint_.size(); }

  /// Mean of the trees' leaf distributions.
  Probabilities predict_proba(std::span<const float> x) const;

  /// Rows are `stride` floats apart; writes 3 probabilities per row.
  void predict_rows(std::span<const float> rows, std::size_t stride, std::span<double> out, int threads = 1) const;

  friend bool operator==(const ForestModel&, const ForestModel&);

 private:
  std::vector<Tree> trees_;
  int features_per_split_;
  std::vector<std::string> fingerprint_;
};

/// Random forest: bootstrap per tree, Gini splits over a random feature subset,
/// grown until pure or fewer than 2 samples. Deterministic for a given seed,
/// independent of the thread count.
ForestModel train(const TrainingSet& data, const ForestParams& params);

struct CvReport {
  double accuracy = 0.0;
  double auc = 0.0;  // macro one-vs-rest
  std::array<double, kClassCount> class_auc{};
  // confusion[true][predicted]
  std::array<std::array<std::size_t, kClassCount>, kClassCount> confusion{};
};

/// Stratified k-fold cross validation with pooled accuracy.
CvReport cross_validate(const TrainingSet& data, int folds, const ForestParams& params);

/// Area under the ROC curve via the rank-sum statistic (ties get average rank).
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

/// Index of the largest probability; ties go to the lower class index.
PixelClass argmax(const Probabilities& p);

std::vector<std::uint8_t> serialize(const ForestModel& model);
ForestModel deserialize(std::span<const std::uint8_t> bytes);
void save_model(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_model(const std::filesystem::path& path);

}  // namespace fzsg::forest
