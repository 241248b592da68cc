#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fzsg/imaging.hpp"
#include "fzsg/morphology.hpp"
#include "synth.hpp"

using namespace fzsg;
using namespace fzsg::imaging;

namespace {

RgbImage constant(int w, int h, Rgb c) { return RgbImage(w, h, c); }

// Direct per-channel median over the replicated-border window.
RgbImage median_oracle(const RgbImage& img, int window) {
  const int r = window / 2;
  RgbImage out(img.width(), img.height());
  std::vector<int> vals;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      std::array<std::uint8_t, 3> m{};
      for (int c = 0; c < 3; ++c) {
        vals.clear();
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = std::clamp(x + dx, 0, img.width() - 1);
            const int yy = std::clamp(y + dy, 0, img.height() - 1);
            const Rgb p = img.at(xx, yy);
            vals.push_back(c == 0 ? p.r : (c == 1 ? p.g : p.b));
          }
        std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
        m[c] = static_cast<std::uint8_t>(vals[vals.size() / 2]);
      }
      out.set(x, y, {m[0], m[1], m[2]});
    }
  return out;
}

}  // namespace

TEST(Resize, PaperWidthHalvesA1536Image) {
  const auto out = resize_bicubic(constant(1536, 1152, {10, 20, 30}), 768);
  EXPECT_EQ(out.width(), 768);
  EXPECT_EQ(out.height(), 576);
}

TEST(Resize, SameWidthIsBitIdentical) {
  std::mt19937_64 rng(3);
  const auto img = synth::random_image(768, 576, rng);
  EXPECT_EQ(resize_bicubic(img, 768), img);
}

TEST(Resize, ConstantStaysConstant) {
  const auto out = resize_bicubic(constant(100, 75, {123, 45, 210}), 768);
  ASSERT_EQ(out.width(), 768);
  ASSERT_EQ(out.height(), 576);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) ASSERT_EQ(out.pixel(i), (Rgb{123, 45, 210}));
}

TEST(Resize, HeightRoundsAndIsAtLeastOne) {
  EXPECT_EQ(resize_bicubic(constant(1000, 3, {}), 10).height(), 1);
  EXPECT_EQ(resize_bicubic(constant(300, 101, {}), 200).height(), 67);  // 67.33
  EXPECT_EQ(resize_bicubic(constant(300, 103, {}), 200).height(), 69);  // 68.67
}

TEST(Resize, RejectsTinyTargetWidth) {
  EXPECT_THROW(resize_bicubic(constant(10, 10, {}), 1), Error);
}

TEST(Resize, DegenerateInputIsInvalidImage) {
  try {
    resize_bicubic(RgbImage(), 768);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_image);
  }
}

TEST(Resize, OvershootIsClampedNotWrapped) {
  // A hard 0/255 step makes Catmull-Rom ring below 0 and above 255; clamped
  // rows stay monotone, wrapped ones would not.
  RgbImage img(16, 4, {0, 0, 0});
  for (int y = 0; y < 4; ++y)
    for (int x = 8; x < 16; ++x) img.set(x, y, {255, 255, 255});
  for (int w : {7, 40}) {
    const auto out = resize_bicubic(img, w);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 1; x < out.width(); ++x) ASSERT_GE(out.at(x, y).r, out.at(x - 1, y).r) << "width " << w;
    EXPECT_EQ(out.at(0, 0).r, 0);
    EXPECT_EQ(out.at(out.width() - 1, 0).r, 255);
  }
}

TEST(Resample, ConstantPlaneStaysConstant) {
  const GrayImage g(50, 30, 77.25);
  for (auto [w, h] : {std::pair{17, 9}, std::pair{120, 71}}) {
    const auto out = resample(g, w, h);
    for (double v : out.pixels()) ASSERT_NEAR(v, 77.25, 1e-9);
  }
}

TEST(CubicWeight, CatmullRomValues) {
  EXPECT_DOUBLE_EQ(cubic_weight(0.0), 1.0);
  EXPECT_DOUBLE_EQ(cubic_weight(1.0), 0.0);
  EXPECT_DOUBLE_EQ(cubic_weight(2.0), 0.0);
  EXPECT_DOUBLE_EQ(cubic_weight(0.5), 0.5625);  // 1.5|t|^3 - 2.5|t|^2 + 1
  EXPECT_DOUBLE_EQ(cubic_weight(1.5), -0.0625);
  // Partition of unity at any phase.
  for (double f : {0.1, 0.25, 0.7})
    EXPECT_NEAR(cubic_weight(f + 1) + cubic_weight(f) + cubic_weight(1 - f) + cubic_weight(2 - f), 1.0, 1e-12);
}

TEST(UpsizeMask, ConstantMasks) {
  const auto full = upsize_mask(BinaryMask(768, 576, true), 1536, 1152);
  EXPECT_EQ(full.width(), 1536);
  EXPECT_EQ(full.height(), 1152);
  EXPECT_EQ(full.count(), full.size());
  const auto empty = upsize_mask(BinaryMask(768, 576, false), 1536, 1152);
  EXPECT_TRUE(empty.none());
}

TEST(UpsizeMask, DiskAreaScalesByFour) {
  const auto disk = morphology::centered_disk(768, 576, 100.0);
  const auto up = upsize_mask(disk, 1536, 1152);
  const double ratio = static_cast<double>(up.count()) / (4.0 * static_cast<double>(disk.count()));
  EXPECT_NEAR(ratio, 1.0, 0.05);
}

TEST(UpsizeMask, ExactOriginalDimensions) {
  const auto up = upsize_mask(BinaryMask(768, 512, true), 6748, 4499);
  EXPECT_EQ(up.width(), 6748);
  EXPECT_EQ(up.height(), 4499);
}

TEST(Gray, EqualWeightMean) {
  RgbImage img(3, 1);
  img.set(0, 0, {30, 60, 90});
  img.set(1, 0, {255, 255, 255});
  img.set(2, 0, {10, 20, 40});
  const auto g = to_gray(img);
  EXPECT_DOUBLE_EQ(g.at(0, 0), 60.0);
  EXPECT_DOUBLE_EQ(g.at(1, 0), 255.0);
  EXPECT_NEAR(g.at(2, 0), 70.0 / 3.0, 1e-12);
}

TEST(Gray, InvariantUnderChannelPermutation) {
  std::mt19937_64 rng(5);
  const auto img = synth::random_image(20, 20, rng);
  RgbImage perm(20, 20);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const Rgb p = img.pixel(i);
    perm.set_pixel(i, {p.b, p.r, p.g});
  }
  EXPECT_EQ(to_gray(img), to_gray(perm));
}

TEST(Color, PureRedHsv) {
  const auto hsv = convert_color(constant(1, 1, {255, 0, 0}), ColorSpace::hsv);
  EXPECT_DOUBLE_EQ(hsv.planes[0][0], 0.0);
  EXPECT_DOUBLE_EQ(hsv.planes[1][0], 1.0);
  EXPECT_DOUBLE_EQ(hsv.planes[2][0], 1.0);
}

TEST(Color, HsvHueOfGreenAndBlue) {
  EXPECT_NEAR(convert_color(constant(1, 1, {0, 255, 0}), ColorSpace::hsv).planes[0][0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(convert_color(constant(1, 1, {0, 0, 255}), ColorSpace::hsv).planes[0][0], 2.0 / 3.0, 1e-12);
}

TEST(Color, GrayIsNeutralInLab) {
  const auto lab = convert_color(constant(1, 1, {128, 128, 128}), ColorSpace::cielab);
  EXPECT_LT(std::abs(lab.planes[1][0]), 1e-6);
  EXPECT_LT(std::abs(lab.planes[2][0]), 1e-6);
  // sRGB 128 has relative luminance ~0.2159, L* ~53.59.
  EXPECT_NEAR(lab.planes[0][0], 53.585, 0.01);
}

TEST(Color, GrayIsNeutralInLuv) {
  const auto luv = convert_color(constant(1, 1, {77, 77, 77}), ColorSpace::cieluv);
  EXPECT_LT(std::abs(luv.planes[1][0]), 1e-6);
  EXPECT_LT(std::abs(luv.planes[2][0]), 1e-6);
}

TEST(Color, WhiteXyzIsD65) {
  const auto xyz = convert_color(constant(1, 1, {255, 255, 255}), ColorSpace::ciexyz);
  EXPECT_NEAR(xyz.planes[0][0], 0.9505, 1e-3);
  // The published Y coefficients sum to 1.0000001.
  EXPECT_NEAR(xyz.planes[1][0], 1.0, 2e-7);
  EXPECT_NEAR(xyz.planes[2][0], 1.089, 1e-3);
  const auto lab = convert_color(constant(1, 1, {255, 255, 255}), ColorSpace::cielab);
  EXPECT_NEAR(lab.planes[0][0], 100.0, 1e-9);
}

TEST(Color, BlackNormalizedRgbIsThirds) {
  const auto n = convert_color(constant(1, 1, {0, 0, 0}), ColorSpace::rgb_norm);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(n.planes[static_cast<std::size_t>(c)][0], 1.0 / 3.0);
  const auto m = convert_color(constant(1, 1, {50, 100, 50}), ColorSpace::rgb_norm);
  EXPECT_DOUBLE_EQ(m.planes[1][0], 0.5);
}

TEST(Median, ConstantUnchanged) {
  const auto img = constant(30, 20, {7, 8, 9});
  EXPECT_EQ(median_filter(img, 5), img);
}

TEST(Median, RemovesIsolatedWhitePixel) {
  RgbImage img(21, 21, {0, 0, 0});
  img.set(10, 10, {255, 255, 255});
  const auto out = median_filter(img, 5);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) ASSERT_EQ(out.pixel(i), (Rgb{0, 0, 0}));
}

TEST(Median, SaltAndPepperMostlyRemoved) {
  std::mt19937_64 rng(21);
  RgbImage img(100, 100, {120, 120, 120});
  std::bernoulli_distribution noisy(0.02);
  std::bernoulli_distribution white(0.5);
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    if (noisy(rng)) img.set_pixel(i, white(rng) ? Rgb{255, 255, 255} : Rgb{0, 0, 0});
  const auto out = median_filter(img, 5);
  EXPECT_EQ(out, median_oracle(img, 5));
  std::size_t same = 0;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) same += out.pixel(i) == Rgb{120, 120, 120};
  EXPECT_GE(static_cast<double>(same) / static_cast<double>(out.pixel_count()), 0.999);
}

TEST(Median, MatchesOracleOnRandomImages) {
  std::mt19937_64 rng(8);
  for (int window : {3, 5, 7, 15}) {
    const auto img = synth::random_image(23, 17, rng);
    EXPECT_EQ(median_filter(img, window), median_oracle(img, window)) << "window " << window;
  }
}

TEST(Median, RejectsEvenOrSmallWindow) {
  const auto img = constant(5, 5, {});
  EXPECT_THROW(median_filter(img, 4), Error);
  EXPECT_THROW(median_filter(img, 1), Error);
}
