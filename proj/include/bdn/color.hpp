#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bdn/image.hpp"
#include "bdn/tensor.hpp"

namespace bdn {

/// Hue/saturation/value feature planes at 1/4 the source resolution.
/// Hue is angle/360 in [0, 1); saturation and value in [0, 1].
struct HsvPlanes {
  int height = 0;  // ceil(source_h / 4)
  int width = 0;   // ceil(source_w / 4)
  std::vector<double> h, s, v;  // each height * width
};

/// Hexcone conversion for one pixel on the 0..255 scale. Achromatic pixels
/// get hue 0 by convention.
inline void rgb_pixel_to_hsv(double r, double g, double b, double& h,
                             double& s, double& v) {
  const double mx = std::max(r, std::max(g, b));
  const double mn = std::min(r, std::min(g, b));
  const double d = mx - mn;
  v = mx / 255.0;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  double deg;
  if (mx == r)
    deg = 60.0 * std::fmod((g - b) / d, 6.0);
  else if (mx == g)
    deg = 60.0 * ((b - r) / d + 2.0);
  else
    deg = 60.0 * ((r - g) / d + 4.0);
  if (deg < 0.0) deg += 360.0;
  h = deg / 360.0;
}

namespace detail {

/// 4x4 box average; edge blocks average over the pixels that exist.
inline std::vector<double> box_downsample4(const std::vector<double>& plane,
                                           int h, int w, int oh, int ow) {
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int by = 0; by < oh; ++by)
    for (int bx = 0; bx < ow; ++bx) {
      const int y0 = by * 4, x0 = bx * 4;
      const int y1 = std::min(y0 + 4, h), x1 = std::min(x0 + 4, w);
      double acc = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          acc += plane[static_cast<std::size_t>(y) * w + x];
      out[static_cast<std::size_t>(by) * ow + bx] =
          acc / ((y1 - y0) * (x1 - x0));
    }
  return out;
}

}  // namespace detail

/// Full-resolution HSV conversion followed by the 1/4 box downsampling.
inline HsvPlanes rgb_to_hsv(const RgbImage& img) {
  if (img.height <= 0 || img.width <= 0 || img.data.empty())
    throw std::invalid_argument("rgb_to_hsv: empty image");
  const int h = img.height, w = img.width;
  std::vector<double> fh(static_cast<std::size_t>(h) * w);
  std::vector<double> fs(fh.size()), fv(fh.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      rgb_pixel_to_hsv(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x),
                       fh[i], fs[i], fv[i]);
    }
  HsvPlanes out;
  out.height = (h + 3) / 4;
  out.width = (w + 3) / 4;
  out.h = detail::box_downsample4(fh, h, w, out.height, out.width);
  out.s = detail::box_downsample4(fs, h, w, out.height, out.width);
  out.v = detail::box_downsample4(fv, h, w, out.height, out.width);
  return out;
}

/// Batched variant feeding the synthesis network: (n, 3, h, w) RGB in [0, 1]
/// -> (n, 3, ceil(h/4), ceil(w/4)) with channels ordered (H, S, V).
inline Tensor hsv_planes_tensor(const Tensor& rgb01) {
  if (rgb01.shape.c != 3)
    throw std::invalid_argument("hsv_planes_tensor: want 3 channels, got " +
                                rgb01.shape.str());
  const int h = rgb01.shape.h, w = rgb01.shape.w;
  const int oh = (h + 3) / 4, ow = (w + 3) / 4;
  Tensor out(Shape{rgb01.shape.n, 3, oh, ow});
  std::vector<double> fh(static_cast<std::size_t>(h) * w), fs(fh.size()),
      fv(fh.size());
  for (int n = 0; n < rgb01.shape.n; ++n) {
    const double* r = rgb01.plane(n, 0);
    const double* g = rgb01.plane(n, 1);
    const double* b = rgb01.plane(n, 2);
    for (std::size_t i = 0; i < fh.size(); ++i)
      rgb_pixel_to_hsv(255.0 * r[i], 255.0 * g[i], 255.0 * b[i], fh[i], fs[i],
                       fv[i]);
    const auto dh = detail::box_downsample4(fh, h, w, oh, ow);
    const auto ds = detail::box_downsample4(fs, h, w, oh, ow);
    const auto dv = detail::box_downsample4(fv, h, w, oh, ow);
    std::copy(dh.begin(), dh.end(), out.plane(n, 0));
    std::copy(ds.begin(), ds.end(), out.plane(n, 1));
    std::copy(dv.begin(), dv.end(), out.plane(n, 2));
  }
  return out;
}

}  // namespace bdn
