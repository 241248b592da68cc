#include "fzsg/fuzzy.hpp"

#include <algorithm>
#include <cmath>

namespace fzsg::fuzzy {

const GrayImage& FuzzyPartition::plane(PixelClass c) const {
  switch (c) {
    case PixelClass::lesion: return lesion;
    case PixelClass::skin: return skin;
    case PixelClass::other: return other;
  }
  return other;
}

double FuzzyPartition::max_sum_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < lesion.size(); ++i) worst = std::max(worst, std::abs(lesion[i] + skin[i] + other[i] - 1.0));
  return worst;
}

std::vector<PixelClass> FuzzyPartition::null_classes() const {
  std::vector<PixelClass> out;
  for (auto c : {PixelClass::lesion, PixelClass::skin, PixelClass::other}) {
    const auto px = plane(c).pixels();
    if (std::none_of(px.begin(), px.end(), [](double v) { return v > 0.0; })) out.push_back(c);
  }
  return out;
}

FuzzyPartition make_partition(GrayImage lesion, GrayImage skin, GrayImage other) {
  require(lesion.same_shape(skin) && lesion.same_shape(other), ErrorCode::dimension_mismatch,
          "membership planes differ in size");
  FuzzyPartition p{std::move(lesion), std::move(skin), std::move(other)};
  for (std::size_t i = 0; i < p.lesion.size(); ++i) {
    for (double v : {p.lesion[i], p.skin[i], p.other[i]})
      require(v >= 0.0 && v <= 1.0, ErrorCode::invalid_argument, "membership outside [0,1]");
  }
  require(p.max_sum_error() <= 1e-9, ErrorCode::invalid_argument, "memberships do not sum to 1");
  return p;
}

FuzzyPartition classify_image(const forest::ForestModel& model, const features::FeatureStack& stack, int threads) {
  require(stack.names() == model.fingerprint(), ErrorCode::fingerprint_mismatch,
          "feature layout of the image does not match the model fingerprint");
  const std::size_t n = stack.pixel_count();
  std::vector<double> proba(n * kClassCount);
  model.predict_rows(std::span<const float>(stack.row(0).data(), n * stack.plane_count()), stack.plane_count(), proba,
                     threads);
  FuzzyPartition p{GrayImage(stack.width(), stack.height()), GrayImage(stack.width(), stack.height()),
                   GrayImage(stack.width(), stack.height())};
  for (std::size_t i = 0; i < n; ++i) {
    p.lesion[i] = proba[i * 3];
    p.skin[i] = proba[i * 3 + 1];
    p.other[i] = proba[i * 3 + 2];
  }
  return p;
}

std::array<std::uint8_t, 3> quantize(double lesion, double skin, double other) {
  const std::array<double, 3> mu{lesion, skin, other};
  std::array<long, 3> q{};
  long sum = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    q[c] = std::lround(255.0 * mu[c]);
    sum += q[c];
  }
  std::size_t largest = 0;
  for (std::size_t c = 1; c < 3; ++c)
    if (mu[c] > mu[largest]) largest = c;
  q[largest] += 255 - sum;
  return {static_cast<std::uint8_t>(std::clamp(q[0], 0L, 255L)), static_cast<std::uint8_t>(std::clamp(q[1], 0L, 255L)),
          static_cast<std::uint8_t>(std::clamp(q[2], 0L, 255L))};
}

ProbabilityImages probability_images(const FuzzyPartition& p) {
  const int w = p.width();
  const int h = p.height();
  ProbabilityImages out{Raster<std::uint8_t>(w, h), Raster<std::uint8_t>(w, h), Raster<std::uint8_t>(w, h),
                        RgbImage(w, h)};
  for (std::size_t i = 0; i < p.lesion.size(); ++i) {
    const auto q = quantize(p.lesion[i], p.skin[i], p.other[i]);
    out.lesion[i] = q[0];
    out.skin[i] = q[1];
    out.other[i] = q[2];
    out.composite.set_pixel(i, {q[0], q[1], q[2]});
  }
  return out;
}

BinaryMask alpha_cut(const FuzzyPartition& p, PixelClass cls, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::invalid_argument, "alpha must lie in [0,1]");
  const GrayImage& mu = p.plane(cls);
  BinaryMask out(mu.width(), mu.height());
  for (std::size_t i = 0; i < mu.size(); ++i) out.set(i, mu[i] >= alpha);
  return out;
}

}  // namespace fzsg::fuzzy
