#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdn {

/// Non-owning handle to one parameter blob and its gradient.
struct ParamView {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

/// v <- momentum * v - lr * g;  p <- p + v.
inline void sgd_step(std::span<double> params, std::span<const double> grads,
                     double lr, double momentum, std::span<double> velocity) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    throw std::invalid_argument("sgd_step: size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * grads[i];
    params[i] += velocity[i];
  }
}

/// Momentum SGD over a fixed set of parameter views. Velocity buffers are
/// keyed by registration order, so the view list must be stable across steps.
class SgdMomentum {
 public:
  explicit SgdMomentum(double momentum = 0.9) : momentum_(momentum) {}

  void step(const std::vector<ParamView>& params, double lr) {
    if (velocity_.size() < params.size()) velocity_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (velocity_[i].size() != params[i].value.size())
        velocity_[i].assign(params[i].value.size(), 0.0);
      sgd_step(params[i].value, params[i].grad, lr, momentum_,
               std::span<double>(velocity_[i]));
    }
  }

  double momentum() const { return momentum_; }

 private:
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

/// Plateau rule: fires when the best validation loss has not improved by at
/// least `min_delta` for `patience` consecutive epochs, at most `max_fires`
/// times per run.
class PlateauDetector {
 public:
  PlateauDetector(int patience, double min_delta, int max_fires = 2)
      : patience_(patience), min_delta_(min_delta), max_fires_(max_fires) {
    if (patience <= 0) throw std::invalid_argument("PlateauDetector: patience must be positive");
  }

  /// Feed one epoch's validation loss; returns true when an anneal should
  /// happen at this epoch.
  bool observe(double loss) {
    if (loss < best_ - min_delta_) {
      best_ = loss;
      stale_ = 0;
      return false;
    }
    ++stale_;
    if (stale_ >= patience_ && fires_ < max_fires_) {
      ++fires_;
      stale_ = 0;
      return true;
    }
    return false;
  }

  int fires() const { return fires_; }

 private:
  int patience_;
  double min_delta_;
  int max_fires_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
  int fires_ = 0;
};

}  // namespace bdn
