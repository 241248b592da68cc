#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fzsg/image.hpp"

namespace fzsg::morphology {

/// Disk-shaped structuring element: offsets (dx, dy) with dx^2 + dy^2 <= r^2.
class Disk {
 public:
  explicit Disk(int radius);

  int radius() const noexcept { return radius_; }
  // Half-width of the disk row at vertical offset dy (|dy| <= radius).
  int half_width(int dy) const { return spans_[static_cast<std::size_t>(dy + radius_)]; }
  std::size_t area() const noexcept;

 private:
  int radius_;
  std::vector<int> spans_;
};

/// What erosion/dilation assume for pixels outside the raster.
enum class Outside { background, foreground };

/// Minkowski erosion. Default: outside is background, so erosion shrinks from
/// the image border.
BinaryMask erode(const BinaryMask& mask, const Disk& se, Outside outside = Outside::background);

/// Minkowski dilation. Default: outside is background.
BinaryMask dilate(const BinaryMask& mask, const Disk& se, Outside outside = Outside::background);

/// dilate(erode(m)).
BinaryMask open(const BinaryMask& mask, const Disk& se);

/// erode(dilate(m)) with the erosion treating outside as foreground, which
/// keeps closing extensive at the image border.
BinaryMask close(const BinaryMask& mask, const Disk& se);

struct Component {
  std::size_t area = 0;
  // Row-major first pixel: smallest (row, column).
  int first_x = 0;
  int first_y = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
};

/// 8-connected foreground labelling. Labels are 1-based, in row-major order of
/// first appearance; 0 is background.
struct Labelling {
  Raster<int> labels;
  std::vector<Component> components;  // components[label - 1]
};

Labelling label_components(const BinaryMask& mask);

/// Mask of a single label.
BinaryMask select_label(const Labelling& lab, int label);

/// Largest 8-connected component; ties go to the component whose first
/// row-major pixel comes first. Empty input yields an empty mask.
BinaryMask largest_component(const BinaryMask& mask);

/// Among the `top_k` largest components, the one whose centroid is closest to
/// the image centre. Ties: larger area, then first row-major pixel.
BinaryMask most_centered_component(const BinaryMask& mask, int top_k);

/// Background regions (4-connected) not reachable from the border become foreground.
BinaryMask fill_holes(const BinaryMask& mask);

std::size_t count_components(const BinaryMask& mask);

/// Centred disk of the given radius (pixel centres within radius of the image centre).
BinaryMask centered_disk(int width, int height, double radius);

}  // namespace fzsg::morphology
