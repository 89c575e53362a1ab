#pragma once

#include <stdexcept>

#include "bdn/rng.hpp"
#include "bdn/tensor.hpp"

namespace bdn {

inline Tensor relu_forward(const Tensor& x) {
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i)
    out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return out;
}

/// Backward masks the upstream gradient by (x > 0); the subgradient at the
/// kink is taken as 0.
inline Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  require_shape(grad_out, x.shape, "relu_backward grad_out");
  Tensor gx(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i)
    gx.data[i] = x.data[i] > 0.0 ? grad_out.data[i] : 0.0;
  return gx;
}

struct DropoutResult {
  Tensor output;
  Tensor mask;  // 0 where dropped, 1/(1-rate) where kept
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) at training time so
/// that inference is the exact identity.
inline DropoutResult dropout_forward(const Tensor& x, double rate, Rng& rng,
                                     bool training) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout_forward: rate must be in [0, 1), got " +
                                std::to_string(rate));
  DropoutResult r{Tensor(x.shape), Tensor(x.shape, 1.0)};
  if (!training || rate == 0.0) {
    r.output = x;
    return r;
  }
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = rng.bernoulli(rate) ? 0.0 : scale;
    r.mask.data[i] = m;
    r.output.data[i] = x.data[i] * m;
  }
  return r;
}

inline DropoutResult dropout_forward(const Tensor& x, double rate,
                                     std::uint64_t seed, bool training) {
  Rng rng(seed);
  return dropout_forward(x, rate, rng, training);
}

inline Tensor dropout_backward(const Tensor& mask, const Tensor& grad_out) {
  require_shape(grad_out, mask.shape, "dropout_backward grad_out");
  Tensor gx(mask.shape);
  for (std::size_t i = 0; i < mask.size(); ++i)
    gx.data[i] = mask.data[i] * grad_out.data[i];
  return gx;
}

/// Global average pooling: (n, c, h, w) -> (n, c, 1, 1).
inline Tensor gap_forward(const Tensor& x) {
  Tensor out(Shape{x.shape.n, x.shape.c, 1, 1});
  const double inv = 1.0 / (static_cast<double>(x.shape.h) * x.shape.w);
  for (int n = 0; n < x.shape.n; ++n)
    for (int c = 0; c < x.shape.c; ++c) {
      const double* p = x.plane(n, c);
      double acc = 0.0;
      for (int i = 0; i < x.shape.h * x.shape.w; ++i) acc += p[i];
      out.at(n, c, 0, 0) = acc * inv;
    }
  return out;
}

inline Tensor gap_backward(const Shape& in_shape, const Tensor& grad_out) {
  require_shape(grad_out, Shape{in_shape.n, in_shape.c, 1, 1},
                "gap_backward grad_out");
  Tensor gx(in_shape);
  const double inv = 1.0 / (static_cast<double>(in_shape.h) * in_shape.w);
  for (int n = 0; n < in_shape.n; ++n)
    for (int c = 0; c < in_shape.c; ++c) {
      const double g = grad_out.at(n, c, 0, 0) * inv;
      double* p = gx.plane(n, c);
      for (int i = 0; i < in_shape.h * in_shape.w; ++i) p[i] = g;
    }
  return gx;
}

/// Reflect-pads the bottom/right of every image plane so that (h, w) reach
/// `target_h` x `target_w`. The networks run on sizes that are multiples of 4.
inline Tensor reflect_pad(const Tensor& x, int target_h, int target_w) {
  if (target_h < x.shape.h || target_w < x.shape.w)
    throw std::invalid_argument("reflect_pad: target smaller than input");
  if (target_h >= 2 * x.shape.h || target_w >= 2 * x.shape.w)
    throw std::invalid_argument("reflect_pad: padding exceeds input extent");
  if (target_h == x.shape.h && target_w == x.shape.w) return x;
  Tensor out(Shape{x.shape.n, x.shape.c, target_h, target_w});
  for (int n = 0; n < x.shape.n; ++n)
    for (int c = 0; c < x.shape.c; ++c)
      for (int h = 0; h < target_h; ++h) {
        const int sh = h < x.shape.h ? h : 2 * x.shape.h - 2 - h;
        for (int w = 0; w < target_w; ++w) {
          const int sw = w < x.shape.w ? w : 2 * x.shape.w - 2 - w;
          out.at(n, c, h, w) = x.at(n, c, sh, sw);
        }
      }
  return out;
}

/// Concatenates tensors along the channel axis; all must agree on (n, h, w).
inline Tensor concat_channels(const std::vector<const Tensor*>& parts) {
  if (parts.empty())
    throw std::invalid_argument("concat_channels: empty input list");
  int total_c = 0;
  const Shape& s0 = parts[0]->shape;
  for (const Tensor* t : parts) {
    if (t->shape.n != s0.n || t->shape.h != s0.h || t->shape.w != s0.w)
      throw std::invalid_argument(
          "concat_channels: spatial/batch mismatch between " + s0.str() +
          " and " + t->shape.str());
    total_c += t->shape.c;
  }
  Tensor out(Shape{s0.n, total_c, s0.h, s0.w});
  for (int n = 0; n < s0.n; ++n) {
    int c_off = 0;
    for (const Tensor* t : parts) {
      for (int c = 0; c < t->shape.c; ++c) {
        const double* src = t->plane(n, c);
        double* dst = out.plane(n, c_off + c);
        for (int i = 0; i < s0.h * s0.w; ++i) dst[i] = src[i];
      }
      c_off += t->shape.c;
    }
  }
  return out;
}

/// Extracts channels [c_begin, c_begin + c_count) — the inverse of
/// concat_channels for gradient routing.
inline Tensor slice_channels(const Tensor& x, int c_begin, int c_count) {
  if (c_begin < 0 || c_count <= 0 || c_begin + c_count > x.shape.c)
    throw std::invalid_argument("slice_channels: range out of bounds");
  Tensor out(Shape{x.shape.n, c_count, x.shape.h, x.shape.w});
  for (int n = 0; n < x.shape.n; ++n)
    for (int c = 0; c < c_count; ++c) {
      const double* src = x.plane(n, c_begin + c);
      double* dst = out.plane(n, c);
      for (int i = 0; i < x.shape.h * x.shape.w; ++i) dst[i] = src[i];
    }
  return out;
}

}  // namespace bdn
