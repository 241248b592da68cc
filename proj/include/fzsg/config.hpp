#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fzsg/forest.hpp"
#include "fzsg/segmentation.hpp"

namespace fzsg {

/// Every tunable shared by the commands; loaded from a key = value file and
/// overridden field by field.
struct RunConfig {
  segmentation::SegmentationConfig seg;
  int n_trees = 100;
  int features_per_split = 13;
  std::uint64_t seed = 1;
  bool normalized_rgb = false;
  int threads = 1;
  std::string model;
  bool trace = false;
  bool overlay = false;

  forest::ForestParams forest_params() const { return {n_trees, features_per_split, seed, threads}; }

  /// Sets one field from its textual value. Unknown keys and malformed values throw invalid_argument.
  void set(const std::string& key, const std::string& value);
  /// Parses "key = value" lines; '#' starts a comment; blank lines are ignored.
  void load_text(const std::string& text);
  void load_file(const std::string& path);
  /// Effective configuration in the same format load_text accepts.
  std::string dump() const;
  void validate() const;

  static const std::vector<std::string>& keys();
};

}  // namespace fzsg
