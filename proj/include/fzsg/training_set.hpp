#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fzsg {

enum class PixelClass : std::uint8_t { lesion = 0, skin = 1, other = 2 };

inline constexpr std::size_t kClassCount = 3;
inline constexpr std::array<std::string_view, kClassCount> kClassNames{"lesion", "skin", "other"};

/// Labelled feature rows, stored row-major.
struct TrainingSet {
  std::vector<std::string> fingerprint;  // ordered feature names
  std::size_t width = 0;                 // features per row
  std::vector<float> values;
  std::vector<PixelClass> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * width, width);
  }
  void append(std::span<const float> features, PixelClass label) {
    values.insert(values.end(), features.begin(), features.end());
    labels.push_back(label);
  }
  void append(const TrainingSet& other) {
    values.insert(values.end(), other.values.begin(), other.values.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  }
  std::array<std::size_t, kClassCount> class_counts() const {
    std::array<std::size_t, kClassCount> c{};
    for (auto l : labels) ++c[static_cast<std::size_t>(l)];
    return c;
  }
};

}  // namespace fzsg
