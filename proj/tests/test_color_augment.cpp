#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "bdn/augment.hpp"
#include "bdn/color.hpp"
#include "bdn/image.hpp"
#include "bdn/image_io.hpp"
#include "bdn/rng.hpp"
#include "oracles.hpp"

using namespace bdn;

namespace {

RgbImage solid(int h, int w, double r, double g, double b) {
  RgbImage img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  return img;
}

RgbImage random_image(int h, int w, Rng& rng) {
  RgbImage img(h, w);
  for (double& v : img.data) v = std::floor(rng.uniform(0.0, 256.0));
  return img;
}

}  // namespace

TEST(Hsv, PureRed) {
  HsvPlanes p = rgb_to_hsv(solid(4, 4, 255, 0, 0));
  EXPECT_DOUBLE_EQ(p.h[0], 0.0);
  EXPECT_DOUBLE_EQ(p.s[0], 1.0);
  EXPECT_DOUBLE_EQ(p.v[0], 1.0);
}

TEST(Hsv, GrayIsAchromatic) {
  HsvPlanes p = rgb_to_hsv(solid(4, 4, 128, 128, 128));
  EXPECT_DOUBLE_EQ(p.h[0], 0.0);
  EXPECT_DOUBLE_EQ(p.s[0], 0.0);
  EXPECT_DOUBLE_EQ(p.v[0], 128.0 / 255.0);
}

TEST(Hsv, MatchesScalarReference) {
  double h, s, v;
  rgb_pixel_to_hsv(64, 128, 192, h, s, v);
  double rh, rs, rv;
  oracle::hsv_reference(64, 128, 192, rh, rs, rv);
  EXPECT_NEAR(h, rh, 1e-12);
  EXPECT_NEAR(s, rs, 1e-12);
  EXPECT_NEAR(v, rv, 1e-12);
  // and across a sweep of random pixels
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const double r = std::floor(rng.uniform(0, 256));
    const double g = std::floor(rng.uniform(0, 256));
    const double b = std::floor(rng.uniform(0, 256));
    rgb_pixel_to_hsv(r, g, b, h, s, v);
    oracle::hsv_reference(r, g, b, rh, rs, rv);
    ASSERT_NEAR(h, rh, 1e-12) << r << "," << g << "," << b;
    ASSERT_NEAR(s, rs, 1e-12);
    ASSERT_NEAR(v, rv, 1e-12);
  }
}

TEST(Hsv, DownsampledSizesAreCeilOfQuarter) {
  Rng rng(3);
  for (auto [h, w] : {std::pair{16, 16}, {17, 19}, {30, 9}, {64, 48}}) {
    HsvPlanes p = rgb_to_hsv(random_image(h, w, rng));
    EXPECT_EQ(p.height, (h + 3) / 4);
    EXPECT_EQ(p.width, (w + 3) / 4);
    for (double v : p.h) { EXPECT_GE(v, 0.0); EXPECT_LT(v, 1.0); }
    for (double v : p.s) { EXPECT_GE(v, 0.0); EXPECT_LE(v, 1.0); }
    for (double v : p.v) { EXPECT_GE(v, 0.0); EXPECT_LE(v, 1.0); }
  }
}

TEST(Hsv, RejectsEmptyImage) {
  RgbImage img;
  EXPECT_THROW(rgb_to_hsv(img), std::invalid_argument);
}

TEST(Reflect, IsInvolution) {
  Rng rng(4);
  RgbImage img = random_image(8, 13, rng);
  EXPECT_TRUE(reflect(reflect(img)).same_content(img));
}

TEST(Reflect, ColumnConstantUnchanged) {
  RgbImage img(5, 7);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 7; ++x) img.at(c, y, x) = 10.0 * y + c;
  EXPECT_TRUE(reflect(img).same_content(img));
}

TEST(Reflect, MinimalTwoPixelCase) {
  RgbImage img(1, 2);
  img.at(0, 0, 0) = 1;
  img.at(0, 0, 1) = 2;
  RgbImage r = reflect(img);
  EXPECT_EQ(r.at(0, 0, 0), 2);
  EXPECT_EQ(r.at(0, 0, 1), 1);
}

TEST(Scale, UnitScaleIsIdentity) {
  Rng rng(5);
  RgbImage img = random_image(10, 12, rng);
  EXPECT_TRUE(scale_to(img, 1.0).same_content(img));
}

TEST(Scale, ConstantStaysConstant) {
  RgbImage img = solid(10, 10, 37, 99, 180);
  RgbImage s = scale_to(img, 1.1);
  EXPECT_EQ(s.height, 11);
  EXPECT_EQ(s.width, 11);
  for (int y = 0; y < 11; ++y) {
    EXPECT_DOUBLE_EQ(s.at(0, y, 3), 37);
    EXPECT_DOUBLE_EQ(s.at(1, y, 3), 99);
    EXPECT_DOUBLE_EQ(s.at(2, y, 3), 180);
  }
}

TEST(Scale, RoundingRule) {
  RgbImage img = solid(10, 10, 1, 2, 3);
  EXPECT_EQ(scale_to(img, 1.1).height, 11);
  EXPECT_EQ(scale_to(img, 0.9).height, 9);
  // draws stay inside [0.9, 1.1]
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    RgbImage s = random_scale(img, rng);
    EXPECT_GE(s.height, 9);
    EXPECT_LE(s.height, 11);
  }
}

TEST(Noise, SigmaZeroIsIdentity) {
  Rng rng(7);
  RgbImage img = random_image(6, 6, rng);
  EXPECT_TRUE(add_noise(img, 0.0, rng).same_content(img));
}

TEST(Noise, OutputStaysInRange) {
  Rng rng(8);
  RgbImage img = solid(16, 16, 250, 3, 128);
  RgbImage n = add_noise(img, 30.0, rng);
  for (double v : n.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 255.0);
  }
}

TEST(Noise, EmpiricalSigmaMatches) {
  Rng rng(9);
  RgbImage img = solid(256, 256, 128, 128, 128);
  RgbImage n = add_noise(img, 5.0, rng);
  double acc = 0.0, acc2 = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double d = n.data[i] - img.data[i];
    acc += d;
    acc2 += d * d;
  }
  const double count = static_cast<double>(img.data.size());
  const double var = acc2 / count - (acc / count) * (acc / count);
  EXPECT_NEAR(std::sqrt(var), 5.0, 0.1);
}

TEST(AlterRgb, MagnitudeZeroIsIdentity) {
  Rng rng(10);
  RgbImage img = random_image(5, 5, rng);
  EXPECT_TRUE(alter_rgb(img, 0.0, rng).same_content(img));
}

TEST(AlterRgb, OffsetIsSpatiallyConstant) {
  Rng rng(11);
  RgbImage img = solid(8, 8, 100, 120, 140);  // mid-range: no clamping
  RgbImage a = alter_rgb(img, 10.0, rng);
  for (int c = 0; c < 3; ++c) {
    const double off = a.at(c, 0, 0) - img.at(c, 0, 0);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        ASSERT_DOUBLE_EQ(a.at(c, y, x) - img.at(c, y, x), off);
  }
}

TEST(AlterRgb, EmpiricalOffsetStd) {
  // Mid-gray keeps the +-25-sigma offsets clear of the clamp.
  Rng rng(12);
  RgbImage img = solid(1, 1, 128, 128, 128);
  double acc2 = 0.0;
  const int calls = 3400;  // 3 offsets per call > 10^4 draws
  int n = 0;
  for (int i = 0; i < calls; ++i) {
    RgbImage a = alter_rgb(img, 25.0, rng);
    for (int c = 0; c < 3; ++c) {
      const double off = a.at(c, 0, 0) - 128.0;
      acc2 += off * off;
      ++n;
    }
  }
  EXPECT_NEAR(std::sqrt(acc2 / n), 25.0, 25.0 * 0.05);
}

TEST(Rotate, ZeroAngleIsIdentity) {
  Rng rng(13);
  RgbImage img = random_image(9, 9, rng);
  EXPECT_TRUE(rotate_by(img, 0.0).same_content(img));
}

TEST(Rotate, StaysInRangeAndInBounds) {
  Rng rng(14);
  RgbImage img = solid(20, 20, 200, 100, 50);
  RgbImage r = rotate_affine(img, rng);
  EXPECT_EQ(r.height, 20);
  EXPECT_EQ(r.width, 20);
  for (double v : r.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 255.0);
  }
}

TEST(Squeeze, UnitIsIdentity) {
  Rng rng(15);
  RgbImage img = random_image(7, 11, rng);
  EXPECT_TRUE(squeeze_to(img, 1.0).same_content(img));
}

TEST(Squeeze, RoundingRule) {
  RgbImage img = solid(10, 10, 5, 5, 5);
  RgbImage s = squeeze_to(img, 0.8);
  EXPECT_EQ(s.height, 10);
  EXPECT_EQ(s.width, 8);
}

TEST(Pipeline, EmptyListIsIdentity) {
  Rng rng(16);
  RgbImage img = random_image(12, 12, rng);
  EXPECT_TRUE(augment_pipeline(img, std::vector<AugmentOp>{}, 7).same_content(img));
}

TEST(Pipeline, DeterministicUnderSeed) {
  Rng rng(17);
  RgbImage img = random_image(20, 20, rng);
  const auto ops = default_pipeline();
  RgbImage a = augment_pipeline(img, ops, 1234);
  RgbImage b = augment_pipeline(img, ops, 1234);
  EXPECT_TRUE(a.same_content(b));
}

TEST(Pipeline, DefaultOutputShapeWithinScalingRange) {
  Rng rng(18);
  RgbImage img = random_image(40, 60, rng);
  const auto ops = default_pipeline();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RgbImage out = augment_pipeline(img, ops, seed);
    EXPECT_GE(out.height, std::lround(0.9 * 40));
    EXPECT_LE(out.height, std::lround(1.1 * 40));
    EXPECT_GE(out.width, std::lround(0.9 * 60));
    EXPECT_LE(out.width, std::lround(1.1 * 60));
  }
}

TEST(Pipeline, EveryOpPreservesValidity) {
  Rng rng(19);
  RgbImage img = random_image(24, 24, rng);
  for (AugmentKind kind :
       {AugmentKind::Reflection, AugmentKind::RandomScaling,
        AugmentKind::SmallNoise, AugmentKind::LargeNoise, AugmentKind::AlterRgb,
        AugmentKind::Rotation, AugmentKind::Squeezing}) {
    RgbImage out = apply_augment(img, {kind, 1.0}, rng);
    EXPECT_GT(out.height, 0);
    EXPECT_GT(out.width, 0);
    for (double v : out.data) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 255.0);
    }
  }
}

TEST(Pipeline, ParseNames) {
  EXPECT_EQ(parse_pipeline("default").size(), 3u);
  EXPECT_TRUE(parse_pipeline("none").empty());
  const auto ops = parse_pipeline("reflect,noise30,squeeze");
  ASSERT_EQ(ops.size(), 3u);
  EXPECT_EQ(ops[1].kind, AugmentKind::LargeNoise);
  EXPECT_THROW(parse_pipeline("bogus"), std::invalid_argument);
}

TEST(ImageIo, PngRoundTripOnIntegerPixels) {
  Rng rng(20);
  RgbImage img = random_image(15, 23, rng);  // integer-valued pixels
  const std::string path =
      (std::filesystem::temp_directory_path() / "bdn_io_test.png").string();
  write_png_image(img, path);
  RgbImage back = read_png_image(path);
  EXPECT_TRUE(back.same_content(img));
  std::filesystem::remove(path);
}

TEST(ImageIo, RawRoundTripIsBitExact) {
  Rng rng(21);
  RgbImage img(9, 7);
  for (double& v : img.data) v = rng.uniform(0.0, 255.0);  // fractional
  const std::string path =
      (std::filesystem::temp_directory_path() / "bdn_io_test.braw").string();
  write_raw_image(img, path);
  RgbImage back = read_raw_image(path);
  EXPECT_EQ(back.data, img.data);
  std::filesystem::remove(path);
}
