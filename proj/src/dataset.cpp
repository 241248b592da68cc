#include "fzsg/dataset.hpp"

#include <algorithm>
#include <cctype>

#include "fzsg/image_io.hpp"
#include "fzsg/imaging.hpp"

namespace fzsg::dataset {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

std::vector<fs::path> list_images(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::io, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = lower_ext(e.path());
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<fs::path> find_label_map(const fs::path& labels_dir, const std::string& stem) {
  for (const auto& name : {stem + "_labels.png", stem + ".png"}) {
    const fs::path p = labels_dir / name;
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

Raster<std::uint8_t> resize_labels(const Raster<std::uint8_t>& labels, int width, int height) {
  if (labels.width() == width && labels.height() == height) return labels;
  Raster<std::uint8_t> out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(labels.height() - 1, static_cast<int>((y + 0.5) * labels.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(labels.width() - 1, static_cast<int>((x + 0.5) * labels.width() / width));
      out.at(x, y) = labels.at(sx, sy);
    }
  }
  return out;
}

Corpus collect(const fs::path& images_dir, const fs::path& labels_dir, int working_width,
               const features::FeatureOptions& opts) {
  require(fs::is_directory(labels_dir), ErrorCode::io, "labels directory not found: " + labels_dir.string());
  Corpus corpus;
  corpus.set.fingerprint = features::feature_names(opts);
  corpus.set.width = corpus.set.fingerprint.size();
  for (const auto& path : list_images(images_dir)) {
    const std::string stem = path.stem().string();
    const auto label_path = find_label_map(labels_dir, stem);
    if (!label_path) {
      corpus.skipped.push_back(stem + ": no label map");
      continue;
    }
    const RgbImage img = io::read_rgb(path);
    const Raster<std::uint8_t> labels = io::read_gray8(*label_path);
    require(labels.width() == img.width() && labels.height() == img.height(), ErrorCode::dimension_mismatch,
            stem + ": label map and image differ in size");
    const RgbImage work = imaging::resize_bicubic(img, working_width);
    const auto work_labels = resize_labels(labels, work.width(), work.height());
    if (std::none_of(work_labels.pixels().begin(), work_labels.pixels().end(),
                     [](std::uint8_t v) { return v != features::kUnlabeled; })) {
      corpus.skipped.push_back(stem + ": no labelled pixels");
      continue;
    }
    const TrainingSet rows = features::sample_pixels(work, work_labels, opts);
    corpus.images.push_back({stem, rows.class_counts()});
    corpus.set.append(rows);
  }
  require(corpus.set.size() > 0, ErrorCode::empty_input, "no labelled pixels found in " + labels_dir.string());
  return corpus;
}

}  // namespace fzsg::dataset
