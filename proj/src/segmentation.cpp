#include "fzsg/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "fzsg/imaging.hpp"
#include "fzsg/morphology.hpp"

namespace fzsg::segmentation {

namespace morph = fzsg::morphology;

void SegmentationConfig::validate() const {
  auto prob = [](double v, const char* name) {
    require(v >= 0.0 && v <= 1.0, ErrorCode::invalid_argument, std::string(name) + " must lie in [0,1]");
  };
  prob(thr_other, "thr_other");
  prob(thr_skin, "thr_skin");
  prob(min_lesion_fraction, "min_lesion_fraction");
  require(interior_fraction > 0.0 && interior_fraction <= 1.0, ErrorCode::invalid_argument,
          "interior_fraction must lie in (0,1]");
  require(working_width >= 2, ErrorCode::invalid_argument, "working_width must be >= 2");
  require(erode_radius >= 1, ErrorCode::invalid_argument, "erode_radius must be >= 1");
  require(post_open_radius >= 1, ErrorCode::invalid_argument, "post_open_radius must be >= 1");
  require(post_close_radius >= 1, ErrorCode::invalid_argument, "post_close_radius must be >= 1");
  require(median_window >= 3 && median_window % 2 == 1, ErrorCode::invalid_argument,
          "median_window must be odd and >= 3");
  require(top_k_components >= 1, ErrorCode::invalid_argument, "top_k_components must be >= 1");
  require(threads >= 1, ErrorCode::invalid_argument, "threads must be >= 1");
}

const TraceEntry* SegmentationTrace::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

BinaryMask artifact_mask(const fuzzy::FuzzyPartition& p, double thr_other) {
  return fuzzy::alpha_cut(p, PixelClass::other, thr_other);
}

LesionSkinMask lesion_skin_mask(const BinaryMask& artifacts, const SegmentationConfig& cfg) {
  const morph::Disk se(cfg.erode_radius);
  LesionSkinMask out;
  BinaryMask m = artifacts.complement();
  out.stages.push_back(m);
  m = morph::erode(m, se);
  out.stages.push_back(m);
  m = morph::largest_component(m);
  out.stages.push_back(m);
  m = morph::fill_holes(m);
  out.stages.push_back(m);
  m = morph::erode(m, se);
  out.stages.push_back(m);
  if (m.none()) {
    out.mask = out.stages.front();
    out.degraded = true;
  } else {
    out.mask = std::move(m);
  }
  return out;
}

namespace {

std::uint8_t lower_median(const std::array<std::uint64_t, 256>& hist, std::uint64_t n) {
  std::uint64_t k = (n - 1) / 2;
  for (std::size_t v = 0; v < hist.size(); ++v) {
    if (hist[v] > k) return static_cast<std::uint8_t>(v);
    k -= hist[v];
  }
  return 255;
}

Rgb channel_medians(const RgbImage& img, const BinaryMask* where) {
  std::array<std::array<std::uint64_t, 256>, 3> hist{};
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (where && !(*where)[i]) continue;
    const Rgb p = img.pixel(i);
    ++hist[0][p.r];
    ++hist[1][p.g];
    ++hist[2][p.b];
    ++n;
  }
  return {lower_median(hist[0], n), lower_median(hist[1], n), lower_median(hist[2], n)};
}

}  // namespace

SkinColor skin_color(const RgbImage& img, const fuzzy::FuzzyPartition& p, double thr_skin) {
  require(img.width() == p.width() && img.height() == p.height(), ErrorCode::dimension_mismatch,
          "skin_color: image and partition differ in size");
  const BinaryMask cut = fuzzy::alpha_cut(p, PixelClass::skin, thr_skin);
  if (cut.none()) return {channel_medians(img, nullptr), true};
  return {channel_medians(img, &cut), false};
}

Inpainted inpaint_for_thresholding(const RgbImage& img, const BinaryMask& artifacts, Rgb skin,
                                   const SegmentationConfig& cfg) {
  require(img.width() == artifacts.width() && img.height() == artifacts.height(), ErrorCode::dimension_mismatch,
          "inpaint: image and mask differ in size");
  RgbImage painted = img;
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    if (artifacts[i]) painted.set_pixel(i, skin);
  Inpainted out{imaging::median_filter(painted, cfg.median_window), img};
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    if (artifacts[i]) out.for_thresholding.set_pixel(i, out.blurred.pixel(i));
  return out;
}

double between_class_variance(std::uint64_t n, std::uint64_t w0, std::uint64_t s0, std::uint64_t s_total) {
  const std::uint64_t w1 = n - w0;
  if (w0 == 0 || w1 == 0) return 0.0;
  const double p0 = static_cast<double>(w0) / static_cast<double>(n);
  const double p1 = static_cast<double>(w1) / static_cast<double>(n);
  const double d = static_cast<double>(s0) / static_cast<double>(w0) -
                   static_cast<double>(s_total - s0) / static_cast<double>(w1);
  return p0 * p1 * d * d;
}

int otsu_threshold(std::span<const std::uint64_t, 256> histogram) {
  std::uint64_t n = 0;
  std::uint64_t s = 0;
  int distinct = 0;
  int only = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    n += histogram[v];
    s += histogram[v] * v;
    if (histogram[v] > 0) {
      ++distinct;
      only = static_cast<int>(v);
    }
  }
  require(n > 0, ErrorCode::empty_input, "otsu: empty histogram");
  if (distinct == 1) return only;
  int best_t = 0;
  double best = -1.0;
  std::uint64_t w0 = 0;
  std::uint64_t s0 = 0;
  for (std::size_t t = 0; t < 256; ++t) {
    w0 += histogram[t];
    s0 += histogram[t] * t;
    const double sigma = between_class_variance(n, w0, s0, s);
    if (sigma > best) {
      best = sigma;
      best_t = static_cast<int>(t);
    }
  }
  return best_t;
}

InitialMask initial_lesion_mask(const RgbImage& for_thresholding, const BinaryMask& region) {
  require(for_thresholding.width() == region.width() && for_thresholding.height() == region.height(),
          ErrorCode::dimension_mismatch, "initial_lesion_mask: image and region differ in size");
  require(!region.none(), ErrorCode::empty_input, "initial_lesion_mask: empty region");
  std::array<std::uint64_t, 256> hist{};
  for (std::size_t i = 0; i < region.size(); ++i)
    if (region[i]) ++hist[for_thresholding.channel(i, 2)];
  InitialMask out{BinaryMask(region.width(), region.height()), otsu_threshold(hist)};
  for (std::size_t i = 0; i < region.size(); ++i) out.mask.set(i, for_thresholding.channel(i, 2) <= out.threshold);
  return out;
}

Postprocessed postprocess(const BinaryMask& mask, const fuzzy::FuzzyPartition& p, const SegmentationConfig& cfg) {
  require(mask.width() == p.width() && mask.height() == p.height(), ErrorCode::dimension_mismatch,
          "postprocess: mask and partition differ in size");
  const int w = mask.width();
  const int h = mask.height();
  Postprocessed out;
  const double radius = std::min(cfg.interior_fraction * w, cfg.interior_fraction * h);
  const BinaryMask interior = morph::centered_disk(w, h, radius);
  const BinaryMask exterior = interior.complement();
  out.stages.push_back({"BW_interior", interior});
  out.stages.push_back({"BW_exterior", exterior});

  const morph::Disk se(cfg.erode_radius);
  const BinaryMask lesion_skin = fuzzy::alpha_cut(p, PixelClass::other, cfg.thr_other).complement();
  const BinaryMask grown = morph::dilate(lesion_skin, se) & interior;
  const BinaryMask shrunk = morph::erode(lesion_skin, se) & exterior;
  out.stages.push_back({"BW_lesion_skin_dilated_interior", grown});
  out.stages.push_back({"BW_lesion_skin_eroded_exterior", shrunk});

  BinaryMask m = mask & (grown | shrunk);
  m = morph::most_centered_component(m, cfg.top_k_components);
  if (m.none()) {
    out.flags.push_back("postprocess_empty_after_refinement");
    m = morph::most_centered_component(mask, cfg.top_k_components);
  }
  m = morph::fill_holes(m);
  out.stages.push_back({"BW_maskoflesion_refined", m});

  const BinaryMask opened = morph::open(m, morph::Disk(cfg.post_open_radius));
  if (opened.none() || morph::count_components(opened) > 1) {
    out.flags.push_back("opening_skipped");
  } else {
    m = opened;
  }
  out.stages.push_back({"BW_maskoflesion_opened", m});

  m = morph::fill_holes(morph::close(m, morph::Disk(cfg.post_close_radius)));
  if (morph::count_components(m) > 1) m = morph::fill_holes(morph::most_centered_component(m, cfg.top_k_components));
  out.stages.push_back({"BW_maskoflesion_closed", m});
  out.mask = std::move(m);
  return out;
}

features::FeatureOptions feature_options_for(const forest::ForestModel& model, int threads) {
  features::FeatureOptions opts;
  const auto& fp = model.fingerprint();
  opts.normalized_rgb = std::find(fp.begin(), fp.end(), "r_norm") != fp.end();
  opts.threads = threads;
  return opts;
}

fuzzy::FuzzyPartition classify(const RgbImage& working, const forest::ForestModel& model, int threads) {
  const auto stack = features::extract_features(working, feature_options_for(model, threads));
  return fuzzy::classify_image(model, stack, threads);
}

SegmentResult segment(const RgbImage& img, const forest::ForestModel& model, const SegmentationConfig& cfg,
                      bool keep_trace) {
  cfg.validate();
  require(img.width() >= 1 && img.height() >= 1, ErrorCode::invalid_image, "segment: empty image");
  SegmentResult result;
  auto& trace = result.trace;
  auto keep = [&](std::string name, TraceImage image) {
    if (keep_trace) trace.add(std::move(name), std::move(image));
  };

  const RgbImage work = imaging::resize_bicubic(img, cfg.working_width);
  keep("input", work);
  const fuzzy::FuzzyPartition p = classify(work, model, cfg.threads);
  for (auto c : p.null_classes()) trace.flags.push_back("null_class_" + std::string(kClassNames[static_cast<std::size_t>(c)]));
  if (keep_trace) {
    const auto pi = fuzzy::probability_images(p);
    keep("I_lesion", pi.lesion);
    keep("I_skin", pi.skin);
    keep("I_other", pi.other);
    keep("I_lesion_skin_other", pi.composite);
  }

  const BinaryMask artifacts = artifact_mask(p, cfg.thr_other);
  keep("BW_disturbingartifacts", artifacts);
  auto ls = lesion_skin_mask(artifacts, cfg);
  if (ls.degraded) trace.flags.push_back("lesion_skin_fallback");
  static const std::array<const char*, 5> kStageNames{"BW_lesion_skin_complement", "BW_lesion_skin_eroded",
                                                      "BW_lesion_skin_largest", "BW_lesion_skin_filled",
                                                      "BW_lesion_skin_eroded_again"};
  for (std::size_t i = 0; i < ls.stages.size(); ++i) keep(kStageNames[i], ls.stages[i]);
  BinaryMask region = ls.mask;
  if (region.none()) {
    trace.flags.push_back("all_artifact_region");
    region = BinaryMask(work.width(), work.height(), true);
  }

  const SkinColor skin = skin_color(work, p, cfg.thr_skin);
  if (skin.fallback) trace.flags.push_back("skin_color_fallback");
  trace.skin_color = {skin.color.r, skin.color.g, skin.color.b};
  keep("BW_skin", fuzzy::alpha_cut(p, PixelClass::skin, cfg.thr_skin));
  const Inpainted inp = inpaint_for_thresholding(work, artifacts, skin.color, cfg);
  keep("I_blurred", inp.blurred);
  keep("I_forthresholding", inp.for_thresholding);

  const InitialMask initial = initial_lesion_mask(inp.for_thresholding, region);
  trace.otsu_threshold = initial.threshold;
  keep("BW_maskoflesion", initial.mask);

  Postprocessed post = postprocess(initial.mask, p, cfg);
  trace.flags.insert(trace.flags.end(), post.flags.begin(), post.flags.end());
  for (auto& s : post.stages) keep(std::move(s.name), std::move(s.image));

  BinaryMask final_mask = std::move(post.mask);
  const BinaryMask lesion_cut = fuzzy::alpha_cut(p, PixelClass::lesion, 0.5);
  if (static_cast<double>(lesion_cut.count()) < cfg.min_lesion_fraction * static_cast<double>(lesion_cut.size())) {
    trace.flags.push_back("no_lesion_evidence");
    final_mask = morph::fill_holes(morph::most_centered_component(final_mask & lesion_cut, cfg.top_k_components));
  }
  keep("BW_final", final_mask);

  result.mask = imaging::upsize_mask(final_mask, img.width(), img.height());
  return result;
}

RgbImage overlay(const RgbImage& img, const BinaryMask& mask) {
  require(img.width() == mask.width() && img.height() == mask.height(), ErrorCode::dimension_mismatch,
          "overlay: image and mask differ in size");
  RgbImage out = img;
  const int w = img.width();
  const int h = img.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !mask.at(x - 1, y) || !mask.at(x + 1, y) ||
                        !mask.at(x, y - 1) || !mask.at(x, y + 1);
      if (edge) out.set(x, y, {0, 255, 0});
    }
  return out;
}

}  // namespace fzsg::segmentation
