#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/image.hpp"
#include "bdn/rng.hpp"

namespace bdn {

/// The candidate label-preserving transformations and their surveyed
/// parameter ranges. The default training pipeline keeps only the three
/// with the highest LP factors: reflection, random scaling, small noise.
enum class AugmentKind {
  Reflection,     // horizontal flip
  RandomScaling,  // proportional scale, s in [0.9, 1.1]
  SmallNoise,     // additive Gaussian, sigma = 5
  LargeNoise,     // additive Gaussian, sigma = 30
  AlterRgb,       // per-channel intensity offset, sigma = 25
  Rotation,       // random angle in [-30, 30] degrees
  Squeezing,      // aspect-ratio change, s in [0.8, 1.2]
};

struct AugmentOp {
  AugmentKind kind;
  double prob = 1.0;  // applied with this probability per draw
};

inline RgbImage reflect(const RgbImage& img) {
  RgbImage out(img.height, img.width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
  return out;
}

/// Bilinear resize to (round(s*h), round(s*w)).
inline RgbImage scale_to(const RgbImage& img, double s) {
  const int oh = std::max(1, static_cast<int>(std::lround(s * img.height)));
  const int ow = std::max(1, static_cast<int>(std::lround(s * img.width)));
  if (oh == img.height && ow == img.width && s == 1.0) return img;
  RgbImage out(oh, ow);
  const double ry = static_cast<double>(img.height) / oh;
  const double rx = static_cast<double>(img.width) / ow;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        out.at(c, y, x) = clamp255(bilinear_sample(
            img, c, (y + 0.5) * ry - 0.5, (x + 0.5) * rx - 0.5));
  return out;
}

inline RgbImage random_scale(const RgbImage& img, Rng& rng) {
  return scale_to(img, rng.uniform(0.9, 1.1));
}

inline RgbImage add_noise(const RgbImage& img, double sigma, Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("add_noise: negative sigma");
  RgbImage out(img.height, img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = clamp255(img.data[i] + sigma * rng.gaussian());
  return out;
}

/// Spatially-constant per-channel Gaussian offset with std = magnitude.
inline RgbImage alter_rgb(const RgbImage& img, double magnitude, Rng& rng) {
  const double off[3] = {magnitude * rng.gaussian(), magnitude * rng.gaussian(),
                         magnitude * rng.gaussian()};
  RgbImage out(img.height, img.width);
  const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      out.data[c * plane + i] = clamp255(img.data[c * plane + i] + off[c]);
  return out;
}

/// Rotation about the image center by `degrees`, bilinear, black border fill.
inline RgbImage rotate_by(const RgbImage& img, double degrees) {
  if (degrees == 0.0) return img;
  const double rad = degrees * (3.14159265358979323846 / 180.0);
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cy = (img.height - 1) / 2.0, cx = (img.width - 1) / 2.0;
  RgbImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      // inverse map: rotate output coordinates back into the source
      const double dy = y - cy, dx = x - cx;
      const double sy = cy + dx * sn + dy * cs;
      const double sx = cx + dx * cs - dy * sn;
      if (sy < 0.0 || sy > img.height - 1 || sx < 0.0 || sx > img.width - 1)
        continue;  // black fill
      for (int c = 0; c < 3; ++c)
        out.at(c, y, x) = clamp255(bilinear_sample(img, c, sy, sx));
    }
  return out;
}

inline RgbImage rotate_affine(const RgbImage& img, Rng& rng) {
  return rotate_by(img, rng.uniform(-30.0, 30.0));
}

/// Aspect-ratio change: width rescaled by s, height fixed.
inline RgbImage squeeze_to(const RgbImage& img, double s) {
  const int ow = std::max(1, static_cast<int>(std::lround(s * img.width)));
  if (ow == img.width && s == 1.0) return img;
  RgbImage out(img.height, ow);
  const double rx = static_cast<double>(img.width) / ow;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < ow; ++x)
        out.at(c, y, x) = clamp255(
            bilinear_sample(img, c, y, (x + 0.5) * rx - 0.5));
  return out;
}

inline RgbImage squeeze(const RgbImage& img, Rng& rng) {
  return squeeze_to(img, rng.uniform(0.8, 1.2));
}

/// Reflection with probability 0.5, then random scaling and small noise.
inline std::vector<AugmentOp> default_pipeline() {
  return {{AugmentKind::Reflection, 0.5},
          {AugmentKind::RandomScaling, 1.0},
          {AugmentKind::SmallNoise, 1.0}};
}

inline RgbImage apply_augment(const RgbImage& img, const AugmentOp& op,
                              Rng& rng) {
  switch (op.kind) {
    case AugmentKind::Reflection:
      return reflect(img);
    case AugmentKind::RandomScaling:
      return random_scale(img, rng);
    case AugmentKind::SmallNoise:
      return add_noise(img, 5.0, rng);
    case AugmentKind::LargeNoise:
      return add_noise(img, 30.0, rng);
    case AugmentKind::AlterRgb:
      return alter_rgb(img, 25.0, rng);
    case AugmentKind::Rotation:
      return rotate_affine(img, rng);
    case AugmentKind::Squeezing:
      return squeeze(img, rng);
  }
  throw std::logic_error("apply_augment: unknown op");
}

inline RgbImage augment_pipeline(const RgbImage& img,
                                 std::span<const AugmentOp> ops, Rng& rng) {
  RgbImage out = img;
  for (const AugmentOp& op : ops) {
    const bool apply = op.prob >= 1.0 || rng.bernoulli(op.prob);
    if (apply) out = apply_augment(out, op, rng);
  }
  return out;
}

inline RgbImage augment_pipeline(const RgbImage& img,
                                 std::span<const AugmentOp> ops,
                                 std::uint64_t seed) {
  Rng rng(seed);
  return augment_pipeline(img, ops, rng);
}

/// Named pipelines for the CLI: "default", "none", or a comma list of
/// reflect, scale, noise5, noise30, alter-rgb, rotate, squeeze.
inline std::vector<AugmentOp> parse_pipeline(const std::string& name) {
  if (name == "default") return default_pipeline();
  if (name == "none" || name.empty()) return {};
  std::vector<AugmentOp> ops;
  std::size_t pos = 0;
  while (pos <= name.size()) {
    const std::size_t next = name.find(',', pos);
    const std::string tok =
        name.substr(pos, next == std::string::npos ? next : next - pos);
    if (tok == "reflect")
      ops.push_back({AugmentKind::Reflection, 1.0});
    else if (tok == "reflect50")
      ops.push_back({AugmentKind::Reflection, 0.5});
    else if (tok == "scale")
      ops.push_back({AugmentKind::RandomScaling, 1.0});
    else if (tok == "noise5")
      ops.push_back({AugmentKind::SmallNoise, 1.0});
    else if (tok == "noise30")
      ops.push_back({AugmentKind::LargeNoise, 1.0});
    else if (tok == "alter-rgb")
      ops.push_back({AugmentKind::AlterRgb, 1.0});
    else if (tok == "rotate")
      ops.push_back({AugmentKind::Rotation, 1.0});
    else if (tok == "squeeze")
      ops.push_back({AugmentKind::Squeezing, 1.0});
    else
      throw std::invalid_argument("parse_pipeline: unknown op '" + tok + "'");
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return ops;
}

}  // namespace bdn
