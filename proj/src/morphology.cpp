#include "fzsg/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fzsg::morphology {

Disk::Disk(int radius) : radius_(radius) {
  require(radius >= 1, ErrorCode::invalid_argument, "structuring element radius must be >= 1");
  spans_.resize(2 * static_cast<std::size_t>(radius) + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    int w = 0;
    while ((w + 1) * (w + 1) + dy * dy <= radius * radius) ++w;
    spans_[static_cast<std::size_t>(dy + radius)] = w;
  }
}

std::size_t Disk::area() const noexcept {
  std::size_t a = 0;
  for (int w : spans_) a += 2 * static_cast<std::size_t>(w) + 1;
  return a;
}

namespace {

// Row prefix counts: prefix[y * (w + 1) + x] = foreground pixels in row y before column x.
std::vector<int> row_prefix(const BinaryMask& m) {
  const int w = m.width();
  std::vector<int> prefix(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(m.height()), 0);
  for (int y = 0; y < m.height(); ++y) {
    int* p = prefix.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1);
    for (int x = 0; x < w; ++x) p[x + 1] = p[x] + (m.at(x, y) ? 1 : 0);
  }
  return prefix;
}

// Shared driver: `hit(in_count, in_width, full_width, row_outside)` decides, per
// disk row, whether the pixel is decided (returns true to stop early).
template <typename RowTest>
BinaryMask sweep(const BinaryMask& m, const Disk& se, bool stop_value, RowTest row_test) {
  const int w = m.width();
  const int h = m.height();
  const int r = se.radius();
  const auto prefix = row_prefix(m);
  BinaryMask out(w, h, !stop_value);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        const int hw = se.half_width(dy);
        const int x0 = x - hw;
        const int x1 = x + hw;
        const int cx0 = std::max(x0, 0);
        const int cx1 = std::min(x1, w - 1);
        const bool clipped = yy < 0 || yy >= h || x0 < 0 || x1 >= w;
        int inside = 0;
        int covered = 0;
        if (yy >= 0 && yy < h) {
          const int* p = prefix.data() + static_cast<std::size_t>(yy) * static_cast<std::size_t>(w + 1);
          inside = p[cx1 + 1] - p[cx0];
          covered = cx1 - cx0 + 1;
        }
        if (row_test(inside, covered, clipped)) {
          out.set(x, y, stop_value);
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, const Disk& se, Outside outside) {
  const bool outside_fg = outside == Outside::foreground;
  // A pixel is removed as soon as one disk row contains background.
  return sweep(mask, se, false, [outside_fg](int inside, int covered, bool clipped) {
    if (clipped && !outside_fg) return true;
    return inside < covered;
  });
}

BinaryMask dilate(const BinaryMask& mask, const Disk& se, Outside outside) {
  const bool outside_fg = outside == Outside::foreground;
  return sweep(mask, se, true, [outside_fg](int inside, int, bool clipped) {
    if (clipped && outside_fg) return true;
    return inside > 0;
  });
}

BinaryMask open(const BinaryMask& mask, const Disk& se) { return dilate(erode(mask, se), se); }

BinaryMask close(const BinaryMask& mask, const Disk& se) {
  return erode(dilate(mask, se), se, Outside::foreground);
}

Labelling label_components(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Labelling lab{Raster<int>(w, h, 0), {}};
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y) || lab.labels.at(x, y) != 0) continue;
      const int id = static_cast<int>(lab.components.size()) + 1;
      Component comp;
      comp.first_x = x;
      comp.first_y = y;
      double sx = 0.0;
      double sy = 0.0;
      lab.labels.at(x, y) = id;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        ++comp.area;
        sx += px;
        sy += py;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx;
            const int ny = py + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (!mask.at(nx, ny) || lab.labels.at(nx, ny) != 0) continue;
            lab.labels.at(nx, ny) = id;
            stack.emplace_back(nx, ny);
          }
        }
      }
      comp.centroid_x = sx / static_cast<double>(comp.area);
      comp.centroid_y = sy / static_cast<double>(comp.area);
      lab.components.push_back(comp);
    }
  }
  return lab;
}

BinaryMask select_label(const Labelling& lab, int label) {
  BinaryMask out(lab.labels.width(), lab.labels.height());
  for (std::size_t i = 0; i < lab.labels.size(); ++i) out.set(i, lab.labels[i] == label);
  return out;
}

namespace {

// Component indices sorted by area descending; ties keep label (row-major) order.
std::vector<std::size_t> by_area(const Labelling& lab) {
  std::vector<std::size_t> order(lab.components.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lab.components[a].area > lab.components[b].area;
  });
  return order;
}

}  // namespace

BinaryMask largest_component(const BinaryMask& mask) {
  const auto lab = label_components(mask);
  if (lab.components.empty()) return BinaryMask(mask.width(), mask.height());
  return select_label(lab, static_cast<int>(by_area(lab).front()) + 1);
}

BinaryMask most_centered_component(const BinaryMask& mask, int top_k) {
  require(top_k >= 1, ErrorCode::invalid_argument, "most_centered_component: top_k must be >= 1");
  const auto lab = label_components(mask);
  if (lab.components.empty()) return BinaryMask(mask.width(), mask.height());
  const auto order = by_area(lab);
  const double cx = (mask.width() - 1) / 2.0;
  const double cy = (mask.height() - 1) / 2.0;
  const std::size_t n = std::min(order.size(), static_cast<std::size_t>(top_k));
  std::size_t best = order[0];
  double best_d = std::hypot(lab.components[best].centroid_x - cx, lab.components[best].centroid_y - cy);
  // `order` already ranks by area then label, so the first of equidistant candidates wins.
  for (std::size_t i = 1; i < n; ++i) {
    const auto& c = lab.components[order[i]];
    const double d = std::hypot(c.centroid_x - cx, c.centroid_y - cy);
    if (d < best_d - 1e-9) {
      best = order[i];
      best_d = d;
    }
  }
  return select_label(lab, static_cast<int>(best) + 1);
}

BinaryMask fill_holes(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask reached(w, h);
  std::vector<std::pair<int, int>> stack;
  auto seed = [&](int x, int y) {
    if (!mask.at(x, y) && !reached.at(x, y)) {
      reached.set(x, y, true);
      stack.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  return reached.complement();
}

std::size_t count_components(const BinaryMask& mask) { return label_components(mask).components.size(); }

BinaryMask centered_disk(int width, int height, double radius) {
  BinaryMask out(width, height);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      out.set(x, y, dx * dx + dy * dy <= radius * radius);
    }
  return out;
}

}  // namespace fzsg::morphology
