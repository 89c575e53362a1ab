#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "bdn/tensor.hpp"

namespace bdn {

/// counts[i] = number of raters giving rating i+1, on the 1..10 scale.
struct RatingHistogram {
  std::array<std::int64_t, 10> counts{};

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

/// (mu, sigma) summary of an image's rating distribution, in rating points.
struct RatingGaussian {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Lower bound on fitted / predicted sigma; keeps unanimous histograms and
/// the loss denominators away from zero.
inline constexpr double kSigmaFloor = 0.1;

inline double mean_rating(const RatingHistogram& h) {
  const std::int64_t t = h.total();
  if (t <= 0) throw std::invalid_argument("mean_rating: empty histogram");
  double acc = 0.0;
  for (int i = 0; i < 10; ++i) acc += (i + 1.0) * h.counts[i];
  return acc / static_cast<double>(t);
}

/// Normalized counts, q[i] = counts[i] / total.
inline std::array<double, 10> normalized_histogram(const RatingHistogram& h) {
  const std::int64_t t = h.total();
  if (t <= 0)
    throw std::invalid_argument("normalized_histogram: empty histogram");
  std::array<double, 10> q{};
  for (int i = 0; i < 10; ++i)
    q[i] = static_cast<double>(h.counts[i]) / static_cast<double>(t);
  return q;
}

inline double histogram_entropy(const RatingHistogram& h) {
  const auto q = normalized_histogram(h);
  double e = 0.0;
  for (double p : q)
    if (p > 0.0) e -= p * std::log(p);
  return e;
}

/// Moment-matching Gaussian fit over the 10 discrete ratings; mu equals
/// mean_rating exactly, sigma is floored at kSigmaFloor.
inline RatingGaussian fit_gaussian(const RatingHistogram& h) {
  const double mu = mean_rating(h);
  const std::int64_t t = h.total();
  double var = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double d = (i + 1.0) - mu;
    var += d * d * static_cast<double>(h.counts[i]);
  }
  var /= static_cast<double>(t);
  return {mu, std::max(std::sqrt(var), kSigmaFloor)};
}

/// Same moment matching from a normalized 10-bin weight vector (used when a
/// distribution head predicts bin probabilities).
inline RatingGaussian fit_gaussian_weights(std::span<const double> w) {
  if (w.size() != 10)
    throw std::invalid_argument("fit_gaussian_weights: want 10 weights");
  double total = 0.0, mu = 0.0;
  for (int i = 0; i < 10; ++i) {
    if (w[i] < 0.0)
      throw std::invalid_argument("fit_gaussian_weights: negative weight");
    total += w[i];
    mu += (i + 1.0) * w[i];
  }
  if (total <= 0.0)
    throw std::invalid_argument("fit_gaussian_weights: zero total");
  mu /= total;
  double var = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double d = (i + 1.0) - mu;
    var += d * d * w[i];
  }
  var /= total;
  return {mu, std::max(std::sqrt(var), kSigmaFloor)};
}

enum class BinaryLabel { Low, High, Excluded };

/// mean < 5-delta -> Low; mean > 5+delta -> High; ties and the band between
/// are Excluded (both inequalities strict).
inline BinaryLabel quantize_binary(double mean, double delta) {
  if (delta < 0.0)
    throw std::invalid_argument("quantize_binary: negative delta");
  if (mean < 5.0 - delta) return BinaryLabel::Low;
  if (mean > 5.0 + delta) return BinaryLabel::High;
  return BinaryLabel::Excluded;
}

/// KL divergence between two Gaussians. The default (corrected) form is
///   log(s2/s1) + (s1^2 + (m1-m2)^2) / (2 s2^2) - 1/2,
/// which is zero iff the distributions coincide. The literal form keeps a
/// 2*m2^2 denominator instead of 2*s2^2 and is provided for fidelity checks
/// only; it requires m2 != 0.
inline double kl_gaussian(const RatingGaussian& n1, const RatingGaussian& n2,
                          bool literal_paper_form = false) {
  if (n1.sigma <= 0.0 || n2.sigma <= 0.0)
    throw std::invalid_argument("kl_gaussian: non-positive sigma");
  const double d = n1.mu - n2.mu;
  const double num = n1.sigma * n1.sigma + d * d;
  double denom;
  if (literal_paper_form) {
    if (n2.mu == 0.0)
      throw std::invalid_argument("kl_gaussian: literal form needs mu2 != 0");
    denom = 2.0 * n2.mu * n2.mu;
  } else {
    denom = 2.0 * n2.sigma * n2.sigma;
  }
  return std::log(n2.sigma / n1.sigma) + num / denom - 0.5;
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// Decodes the 2-channel head output of one image: raw[0] is the mean,
/// raw[1] maps through softplus (plus the floor) to the sigma.
inline RatingGaussian decode_gaussian_head(double raw0, double raw1) {
  return {raw0, softplus(raw1) + kSigmaFloor};
}

struct GaussianHeadLoss {
  double loss = 0.0;
  Tensor grad;  // (n, 2, 1, 1), d loss / d raw head output
};

/// Mean corrected-form KL(target || predicted) over the batch, with the
/// analytic gradient w.r.t. the raw 2-channel head output.
inline GaussianHeadLoss kl_loss_and_grad(const Tensor& pred_raw,
                                         std::span<const RatingGaussian> targets) {
  if (pred_raw.shape.c != 2 || pred_raw.shape.h != 1 || pred_raw.shape.w != 1)
    throw std::invalid_argument("kl_loss_and_grad: head output must be (n, 2, 1, 1), got " +
                                pred_raw.shape.str());
  const int n = pred_raw.shape.n;
  if (static_cast<int>(targets.size()) != n)
    throw std::invalid_argument("kl_loss_and_grad: target count mismatch");
  GaussianHeadLoss r{0.0, Tensor(pred_raw.shape)};
  for (int i = 0; i < n; ++i) {
    const double raw0 = pred_raw.data[2 * static_cast<std::size_t>(i)];
    const double raw1 = pred_raw.data[2 * static_cast<std::size_t>(i) + 1];
    const RatingGaussian pred = decode_gaussian_head(raw0, raw1);
    const RatingGaussian& t = targets[i];
    r.loss += kl_gaussian(t, pred);
    const double s2 = pred.sigma;
    const double num = t.sigma * t.sigma + (t.mu - pred.mu) * (t.mu - pred.mu);
    const double dmu2 = (pred.mu - t.mu) / (s2 * s2);
    const double dsigma2 = 1.0 / s2 - num / (s2 * s2 * s2);
    r.grad.data[2 * static_cast<std::size_t>(i)] = dmu2 / n;
    r.grad.data[2 * static_cast<std::size_t>(i) + 1] =
        dsigma2 * sigmoid(raw1) / n;
  }
  r.loss /= n;
  return r;
}

struct VecLoss {
  double loss = 0.0;
  std::array<double, 10> grad{};
};

/// Cross-entropy between softmax(logits) and the normalized histogram.
inline VecLoss distribution_softmax_loss(std::span<const double> logits,
                                         const RatingHistogram& h) {
  if (logits.size() != 10)
    throw std::invalid_argument("distribution_softmax_loss: want 10 logits");
  const auto q = normalized_histogram(h);
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::array<double, 10> p{};
  double z = 0.0;
  for (int i = 0; i < 10; ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  VecLoss r;
  for (int i = 0; i < 10; ++i) {
    p[i] /= z;
    if (q[i] > 0.0) r.loss -= q[i] * std::log(std::max(p[i], 1e-300));
  }
  for (int i = 0; i < 10; ++i) r.grad[i] = p[i] - q[i];
  return r;
}

/// KL(normalized histogram || softmax(logits)) = cross-entropy - entropy(h).
/// The entropy term is constant in the logits, so the gradient is identical
/// to the softmax loss's.
inline VecLoss distribution_kl_loss(std::span<const double> logits,
                                    const RatingHistogram& h) {
  VecLoss r = distribution_softmax_loss(logits, h);
  r.loss -= histogram_entropy(h);
  return r;
}

namespace detail {

template <typename Fn>
inline std::pair<double, Tensor> batch_vec_loss(const Tensor& logits,
                                                std::span<const RatingHistogram> hs,
                                                Fn&& per_sample) {
  if (logits.shape.c != 10 || logits.shape.h != 1 || logits.shape.w != 1)
    throw std::invalid_argument("distribution loss: logits must be (n, 10, 1, 1), got " +
                                logits.shape.str());
  const int n = logits.shape.n;
  if (static_cast<int>(hs.size()) != n)
    throw std::invalid_argument("distribution loss: histogram count mismatch");
  double loss = 0.0;
  Tensor grad(logits.shape);
  for (int i = 0; i < n; ++i) {
    const VecLoss r = per_sample(
        std::span<const double>(logits.data.data() + 10 * static_cast<std::size_t>(i), 10),
        hs[i]);
    loss += r.loss;
    for (int k = 0; k < 10; ++k)
      grad.data[10 * static_cast<std::size_t>(i) + k] = r.grad[k] / n;
  }
  return {loss / n, std::move(grad)};
}

}  // namespace detail

inline std::pair<double, Tensor> distribution_softmax_loss_batch(
    const Tensor& logits, std::span<const RatingHistogram> hs) {
  return detail::batch_vec_loss(logits, hs, [](auto l, const RatingHistogram& h) {
    return distribution_softmax_loss(l, h);
  });
}

inline std::pair<double, Tensor> distribution_kl_loss_batch(
    const Tensor& logits, std::span<const RatingHistogram> hs) {
  return detail::batch_vec_loss(logits, hs, [](auto l, const RatingHistogram& h) {
    return distribution_kl_loss(l, h);
  });
}

}  // namespace bdn
