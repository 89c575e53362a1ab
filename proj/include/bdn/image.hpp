#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "bdn/tensor.hpp"

namespace bdn {

/// 3-channel image, planar (c, y, x) layout, intensities on the 0..255 scale.
/// Stored as doubles because transforms produce fractional values; every
/// transform clamps back into [0, 255].
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // size 3 * height * width

  RgbImage() = default;
  RgbImage(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, fill) {
    if (h <= 0 || w <= 0)
      throw std::invalid_argument("RgbImage: non-positive size");
  }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  double& at(int c, int y, int x) { return data[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data[index(c, y, x)]; }

  bool same_content(const RgbImage& o) const {
    return height == o.height && width == o.width && data == o.data;
  }
};

inline double clamp255(double v) { return std::clamp(v, 0.0, 255.0); }

inline void clamp_pixels(RgbImage& img) {
  for (double& v : img.data) v = clamp255(v);
}

/// Scales intensities into [0, 1] and adds the batch axis: (1, 3, h, w).
inline Tensor image_to_tensor01(const RgbImage& img) {
  Tensor t(Shape{1, 3, img.height, img.width});
  for (std::size_t i = 0; i < img.data.size(); ++i)
    t.data[i] = img.data[i] / 255.0;
  return t;
}

/// Bilinear sample with clamp-to-edge; (y, x) in source pixel coordinates.
inline double bilinear_sample(const RgbImage& img, int c, double y, double x) {
  const double yc = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const double xc = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  const int y0 = static_cast<int>(yc);
  const int x0 = static_cast<int>(xc);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const double fy = yc - y0;
  const double fx = xc - x0;
  return (1 - fy) * ((1 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1)) +
         fy * ((1 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1));
}

}  // namespace bdn
