#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/rng.hpp"
#include "bdn/tensor.hpp"

namespace bdn {

/// 2-D cross-correlation layer. Weights are (out, in, kh, kw); padding is
/// implicit zero padding.
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;
  Tensor weights;             // (out, in, kh, kw)
  std::vector<double> bias;   // (out)
  std::vector<double> bias_grad;

  ConvLayer() = default;
  ConvLayer(int in_c, int out_c, int kh_, int kw_, int sh_ = 1, int sw_ = 1,
            int ph_ = 0, int pw_ = 0)
      : in_channels(in_c),
        out_channels(out_c),
        kh(kh_),
        kw(kw_),
        sh(sh_),
        sw(sw_),
        ph(ph_),
        pw(pw_),
        weights(Shape{out_c, in_c, kh_, kw_}),
        bias(out_c, 0.0),
        bias_grad(out_c, 0.0) {
    if (in_c <= 0 || out_c <= 0 || kh_ <= 0 || kw_ <= 0 || sh_ <= 0 ||
        sw_ <= 0 || ph_ < 0 || pw_ < 0)
      throw std::invalid_argument("ConvLayer: invalid hyperparameters");
  }

  int out_h(int h) const { return (h + 2 * ph - kh) / sh + 1; }
  int out_w(int w) const { return (w + 2 * pw - kw) / sw + 1; }

  /// He-style init: N(0, 2/fan_in) weights, zero biases.
  void init(Rng& rng) {
    const double stddev =
        std::sqrt(2.0 / (static_cast<double>(in_channels) * kh * kw));
    for (double& v : weights.data) v = rng.gaussian(0.0, stddev);
    for (double& b : bias) b = 0.0;
  }
};

/// Transposed convolution (the SCAE decoder side). Weights are
/// (in, out, kh, kw). `oph`/`opw` extend the output by up to stride-1 rows /
/// columns so that a strided ConvLayer's spatial map can be inverted exactly.
struct DeconvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;
  int oph = 0, opw = 0;
  Tensor weights;             // (in, out, kh, kw)
  std::vector<double> bias;   // (out)
  std::vector<double> bias_grad;

  DeconvLayer() = default;
  DeconvLayer(int in_c, int out_c, int kh_, int kw_, int sh_ = 1, int sw_ = 1,
              int ph_ = 0, int pw_ = 0, int oph_ = 0, int opw_ = 0)
      : in_channels(in_c),
        out_channels(out_c),
        kh(kh_),
        kw(kw_),
        sh(sh_),
        sw(sw_),
        ph(ph_),
        pw(pw_),
        oph(oph_),
        opw(opw_),
        weights(Shape{in_c, out_c, kh_, kw_}),
        bias(out_c, 0.0),
        bias_grad(out_c, 0.0) {
    if (in_c <= 0 || out_c <= 0 || kh_ <= 0 || kw_ <= 0 || sh_ <= 0 ||
        sw_ <= 0 || ph_ < 0 || pw_ < 0 || oph_ < 0 || oph_ >= sh_ ||
        opw_ < 0 || opw_ >= sw_)
      throw std::invalid_argument("DeconvLayer: invalid hyperparameters");
  }

  int out_h(int h) const { return (h - 1) * sh - 2 * ph + kh + oph; }
  int out_w(int w) const { return (w - 1) * sw - 2 * pw + kw + opw; }

  /// Mirror of `conv`: swapped channel counts, same kernel/stride/padding,
  /// output padding chosen so that deconv(conv(x)) restores x's spatial shape
  /// for any input the conv accepts with the same parity as `sample_h/w`.
  static DeconvLayer mirror_of(const ConvLayer& conv, int sample_h,
                               int sample_w) {
    const int oph = (sample_h + 2 * conv.ph - conv.kh) % conv.sh;
    const int opw = (sample_w + 2 * conv.pw - conv.kw) % conv.sw;
    return DeconvLayer(conv.out_channels, conv.in_channels, conv.kh, conv.kw,
                       conv.sh, conv.sw, conv.ph, conv.pw, oph, opw);
  }

  void init(Rng& rng) {
    const double stddev =
        std::sqrt(2.0 / (static_cast<double>(in_channels) * kh * kw));
    for (double& v : weights.data) v = rng.gaussian(0.0, stddev);
    for (double& b : bias) b = 0.0;
  }
};

namespace detail {

inline void check_conv_input(const Tensor& x, int in_channels, int out_h,
                             int out_w, const char* op) {
  if (x.shape.c != in_channels)
    throw std::invalid_argument(
        std::string(op) + ": input has " + std::to_string(x.shape.c) +
        " channels (shape " + x.shape.str() + "), layer expects " +
        std::to_string(in_channels));
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument(std::string(op) + ": output spatial size " +
                                std::to_string(out_h) + "x" +
                                std::to_string(out_w) + " for input " +
                                x.shape.str() + " is smaller than 1x1");
}

}  // namespace detail

/// Gradients of a scalar loss w.r.t. a conv/deconv call's operands.
struct ConvGrads {
  Tensor input;
  Tensor weights;
  std::vector<double> bias;
};

inline Tensor conv_forward(const Tensor& x, const ConvLayer& layer) {
  const int oh_n = layer.out_h(x.shape.h);
  const int ow_n = layer.out_w(x.shape.w);
  detail::check_conv_input(x, layer.in_channels, oh_n, ow_n, "conv_forward");

  Tensor out(Shape{x.shape.n, layer.out_channels, oh_n, ow_n});
  const int planes = x.shape.n * layer.out_channels;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const int n = p / layer.out_channels;
    const int oc = p % layer.out_channels;
    double* oplane = out.plane(n, oc);
    for (int i = 0; i < oh_n * ow_n; ++i) oplane[i] = layer.bias[oc];
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      const double* xplane = x.plane(n, ic);
      for (int kh = 0; kh < layer.kh; ++kh) {
        for (int kw = 0; kw < layer.kw; ++kw) {
          const double wv = layer.weights.at(oc, ic, kh, kw);
          for (int oh = 0; oh < oh_n; ++oh) {
            const int ih = oh * layer.sh + kh - layer.ph;
            if (ih < 0 || ih >= x.shape.h) continue;
            const double* xrow = xplane + static_cast<std::size_t>(ih) * x.shape.w;
            double* orow = oplane + static_cast<std::size_t>(oh) * ow_n;
            for (int ow = 0; ow < ow_n; ++ow) {
              const int iw = ow * layer.sw + kw - layer.pw;
              if (iw < 0 || iw >= x.shape.w) continue;
              orow[ow] += wv * xrow[iw];
            }
          }
        }
      }
    }
  }
  return out;
}

inline ConvGrads conv_backward(const Tensor& x, const ConvLayer& layer,
                               const Tensor& grad_out) {
  const int oh_n = layer.out_h(x.shape.h);
  const int ow_n = layer.out_w(x.shape.w);
  detail::check_conv_input(x, layer.in_channels, oh_n, ow_n, "conv_backward");
  require_shape(grad_out, Shape{x.shape.n, layer.out_channels, oh_n, ow_n},
                "conv_backward grad_out");

  ConvGrads g;
  g.input = Tensor(x.shape);
  g.weights = Tensor(layer.weights.shape);
  g.bias.assign(layer.out_channels, 0.0);

  // d/dinput: each (n, ic) plane has a single writer.
  const int in_planes = x.shape.n * layer.in_channels;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < in_planes; ++p) {
    const int n = p / layer.in_channels;
    const int ic = p % layer.in_channels;
    double* gx = g.input.plane(n, ic);
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      const double* gplane = grad_out.plane(n, oc);
      for (int kh = 0; kh < layer.kh; ++kh) {
        for (int kw = 0; kw < layer.kw; ++kw) {
          const double wv = layer.weights.at(oc, ic, kh, kw);
          for (int oh = 0; oh < oh_n; ++oh) {
            const int ih = oh * layer.sh + kh - layer.ph;
            if (ih < 0 || ih >= x.shape.h) continue;
            double* gxrow = gx + static_cast<std::size_t>(ih) * x.shape.w;
            const double* grow = gplane + static_cast<std::size_t>(oh) * ow_n;
            for (int ow = 0; ow < ow_n; ++ow) {
              const int iw = ow * layer.sw + kw - layer.pw;
              if (iw < 0 || iw >= x.shape.w) continue;
              gxrow[iw] += wv * grow[ow];
            }
          }
        }
      }
    }
  }

  // d/dweights: each (oc, ic) slice has a single writer.
  const int w_slices = layer.out_channels * layer.in_channels;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < w_slices; ++p) {
    const int oc = p / layer.in_channels;
    const int ic = p % layer.in_channels;
    for (int kh = 0; kh < layer.kh; ++kh) {
      for (int kw = 0; kw < layer.kw; ++kw) {
        double acc = 0.0;
        for (int n = 0; n < x.shape.n; ++n) {
          const double* xplane = x.plane(n, ic);
          const double* gplane = grad_out.plane(n, oc);
          for (int oh = 0; oh < oh_n; ++oh) {
            const int ih = oh * layer.sh + kh - layer.ph;
            if (ih < 0 || ih >= x.shape.h) continue;
            const double* xrow = xplane + static_cast<std::size_t>(ih) * x.shape.w;
            const double* grow = gplane + static_cast<std::size_t>(oh) * ow_n;
            for (int ow = 0; ow < ow_n; ++ow) {
              const int iw = ow * layer.sw + kw - layer.pw;
              if (iw < 0 || iw >= x.shape.w) continue;
              acc += xrow[iw] * grow[ow];
            }
          }
        }
        g.weights.at(oc, ic, kh, kw) = acc;
      }
    }
  }

  for (int oc = 0; oc < layer.out_channels; ++oc) {
    double acc = 0.0;
    for (int n = 0; n < x.shape.n; ++n) {
      const double* gplane = grad_out.plane(n, oc);
      for (int i = 0; i < oh_n * ow_n; ++i) acc += gplane[i];
    }
    g.bias[oc] = acc;
  }
  return g;
}

inline Tensor deconv_forward(const Tensor& x, const DeconvLayer& layer) {
  const int oh_n = layer.out_h(x.shape.h);
  const int ow_n = layer.out_w(x.shape.w);
  detail::check_conv_input(x, layer.in_channels, oh_n, ow_n, "deconv_forward");

  Tensor out(Shape{x.shape.n, layer.out_channels, oh_n, ow_n});
  const int planes = x.shape.n * layer.out_channels;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const int n = p / layer.out_channels;
    const int oc = p % layer.out_channels;
    double* oplane = out.plane(n, oc);
    for (int i = 0; i < oh_n * ow_n; ++i) oplane[i] = layer.bias[oc];
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      const double* xplane = x.plane(n, ic);
      for (int kh = 0; kh < layer.kh; ++kh) {
        for (int kw = 0; kw < layer.kw; ++kw) {
          const double wv = layer.weights.at(ic, oc, kh, kw);
          // oh = ih*sh - ph + kh  (scatter written as gather per input row)
          for (int ih = 0; ih < x.shape.h; ++ih) {
            const int oh = ih * layer.sh - layer.ph + kh;
            if (oh < 0 || oh >= oh_n) continue;
            const double* xrow = xplane + static_cast<std::size_t>(ih) * x.shape.w;
            double* orow = oplane + static_cast<std::size_t>(oh) * ow_n;
            for (int iw = 0; iw < x.shape.w; ++iw) {
              const int ow = iw * layer.sw - layer.pw + kw;
              if (ow < 0 || ow >= ow_n) continue;
              orow[ow] += wv * xrow[iw];
            }
          }
        }
      }
    }
  }
  return out;
}

inline ConvGrads deconv_backward(const Tensor& x, const DeconvLayer& layer,
                                 const Tensor& grad_out) {
  const int oh_n = layer.out_h(x.shape.h);
  const int ow_n = layer.out_w(x.shape.w);
  detail::check_conv_input(x, layer.in_channels, oh_n, ow_n,
                           "deconv_backward");
  require_shape(grad_out, Shape{x.shape.n, layer.out_channels, oh_n, ow_n},
                "deconv_backward grad_out");

  ConvGrads g;
  g.input = Tensor(x.shape);
  g.weights = Tensor(layer.weights.shape);
  g.bias.assign(layer.out_channels, 0.0);

  const int in_planes = x.shape.n * layer.in_channels;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < in_planes; ++p) {
    const int n = p / layer.in_channels;
    const int ic = p % layer.in_channels;
    double* gx = g.input.plane(n, ic);
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      const double* gplane = grad_out.plane(n, oc);
      for (int kh = 0; kh < layer.kh; ++kh) {
        for (int kw = 0; kw < layer.kw; ++kw) {
          const double wv = layer.weights.at(ic, oc, kh, kw);
          for (int ih = 0; ih < x.shape.h; ++ih) {
            const int oh = ih * layer.sh - layer.ph + kh;
            if (oh < 0 || oh >= oh_n) continue;
            double* gxrow = gx + static_cast<std::size_t>(ih) * x.shape.w;
            const double* grow = gplane + static_cast<std::size_t>(oh) * ow_n;
            for (int iw = 0; iw < x.shape.w; ++iw) {
              const int ow = iw * layer.sw - layer.pw + kw;
              if (ow < 0 || ow >= ow_n) continue;
              gxrow[iw] += wv * grow[ow];
            }
          }
        }
      }
    }
  }

  const int w_slices = layer.in_channels * layer.out_channels;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < w_slices; ++p) {
    const int ic = p / layer.out_channels;
    const int oc = p % layer.out_channels;
    for (int kh = 0; kh < layer.kh; ++kh) {
      for (int kw = 0; kw < layer.kw; ++kw) {
        double acc = 0.0;
        for (int n = 0; n < x.shape.n; ++n) {
          const double* xplane = x.plane(n, ic);
          const double* gplane = grad_out.plane(n, oc);
          for (int ih = 0; ih < x.shape.h; ++ih) {
            const int oh = ih * layer.sh - layer.ph + kh;
            if (oh < 0 || oh >= oh_n) continue;
            const double* xrow = xplane + static_cast<std::size_t>(ih) * x.shape.w;
            const double* grow = gplane + static_cast<std::size_t>(oh) * ow_n;
            for (int iw = 0; iw < x.shape.w; ++iw) {
              const int ow = iw * layer.sw - layer.pw + kw;
              if (ow < 0 || ow >= ow_n) continue;
              acc += xrow[iw] * grow[ow];
            }
          }
        }
        g.weights.at(ic, oc, kh, kw) = acc;
      }
    }
  }

  for (int oc = 0; oc < layer.out_channels; ++oc) {
    double acc = 0.0;
    for (int n = 0; n < x.shape.n; ++n) {
      const double* gplane = grad_out.plane(n, oc);
      for (int i = 0; i < oh_n * ow_n; ++i) acc += gplane[i];
    }
    g.bias[oc] = acc;
  }
  return g;
}

}  // namespace bdn
