#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdn/tensor.hpp"

namespace bdn {

struct LossGrad {
  double loss = 0.0;
  Tensor grad;
};

namespace detail {

/// softmax over k contiguous logits, written into `out`.
inline void softmax(const double* logits, int k, double* out) {
  double mx = logits[0];
  for (int i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (int i = 0; i < k; ++i) out[i] /= sum;
}

}  // namespace detail

/// Mean cross-entropy over the batch for (n, k, 1, 1) logits and integer
/// class labels; the gradient is (softmax - onehot) / n.
inline LossGrad softmax_xent(const Tensor& logits,
                             std::span<const int> labels) {
  if (logits.shape.h != 1 || logits.shape.w != 1)
    throw std::invalid_argument("softmax_xent: logits must be (n, k, 1, 1), got " +
                                logits.shape.str());
  const int n = logits.shape.n;
  const int k = logits.shape.c;
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("softmax_xent: " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(n));
  LossGrad r{0.0, Tensor(logits.shape)};
  std::vector<double> p(k);
  for (int i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= k)
      throw std::invalid_argument("softmax_xent: label " + std::to_string(y) +
                                  " out of range for " + std::to_string(k) +
                                  " classes");
    detail::softmax(logits.data.data() + static_cast<std::size_t>(i) * k, k,
                    p.data());
    r.loss += -std::log(std::max(p[y], 1e-300));
    for (int c = 0; c < k; ++c)
      r.grad.data[static_cast<std::size_t>(i) * k + c] =
          (p[c] - (c == y ? 1.0 : 0.0)) / n;
  }
  r.loss /= n;
  return r;
}

/// Mean squared error over all entries; gradient 2(x - target) / count.
inline LossGrad mse_loss(const Tensor& x, const Tensor& target) {
  require_shape(target, x.shape, "mse_loss target");
  LossGrad r{0.0, Tensor(x.shape)};
  const double inv = 1.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data[i] - target.data[i];
    r.loss += d * d * inv;
    r.grad.data[i] = 2.0 * d * inv;
  }
  return r;
}

/// Composite supervision over `groups` independent 2-way heads packed into a
/// (n, 2*groups, 1, 1) output: the mean of the per-group softmax
/// cross-entropies. `flags` is row-major n x groups of 0/1 labels.
inline LossGrad composite_label_loss(const Tensor& logits,
                                     std::span<const std::uint8_t> flags,
                                     int groups) {
  if (logits.shape.h != 1 || logits.shape.w != 1 ||
      logits.shape.c != 2 * groups)
    throw std::invalid_argument(
        "composite_label_loss: logits must be (n, 2*" +
        std::to_string(groups) + ", 1, 1), got " + logits.shape.str());
  const int n = logits.shape.n;
  if (static_cast<int>(flags.size()) != n * groups)
    throw std::invalid_argument("composite_label_loss: flag count mismatch");
  LossGrad r{0.0, Tensor(logits.shape)};
  double p[2];
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < groups; ++g) {
      const std::size_t off = (static_cast<std::size_t>(i) * 2 * groups) + 2 * g;
      detail::softmax(logits.data.data() + off, 2, p);
      const int y = flags[static_cast<std::size_t>(i) * groups + g] ? 1 : 0;
      r.loss += -std::log(std::max(p[y], 1e-300));
      const double scale = 1.0 / (static_cast<double>(n) * groups);
      r.grad.data[off] = (p[0] - (y == 0 ? 1.0 : 0.0)) * scale;
      r.grad.data[off + 1] = (p[1] - (y == 1 ? 1.0 : 0.0)) * scale;
    }
  }
  r.loss /= static_cast<double>(n) * groups;
  return r;
}

}  // namespace bdn
