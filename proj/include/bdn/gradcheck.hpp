#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bdn/net.hpp"
#include "bdn/optim.hpp"

namespace bdn {

/// relative error with a small absolute floor in the denominator; a pair of
/// (numerically) zero gradients compares as 0.
inline double grad_rel_err(double analytic, double numeric) {
  if (std::abs(analytic) < 1e-12 && std::abs(numeric) < 1e-12) return 0.0;
  const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
  return std::abs(analytic - numeric) / denom;
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
};

/// Central finite differences over every entry of every parameter view.
/// `loss_fn` must recompute the loss from the current parameter values and
/// be deterministic (fix dropout seeds etc. inside the closure).
/// `analytic` holds the backprop gradients captured before perturbing.
inline GradCheckReport grad_check_params(
    const std::vector<ParamView>& params,
    const std::vector<std::vector<double>>& analytic,
    const std::function<double()>& loss_fn, double eps = 1e-5) {
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].value.size(); ++i) {
      double& v = params[p].value[i];
      const double saved = v;
      v = saved + eps;
      const double lp = loss_fn();
      v = saved - eps;
      const double lm = loss_fn();
      v = saved;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double err = grad_rel_err(analytic[p][i], numeric);
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_param = params[p].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

/// End-to-end check of a network against a loss on a fixed input: runs one
/// forward/backward for the analytic gradients, then finite-differences every
/// parameter. Dropout masks are frozen by reseeding the rng per evaluation.
template <typename LossFn>
GradCheckReport grad_check(Net& net, const Tensor& input, LossFn&& loss_of_output,
                           bool training = false, std::uint64_t dropout_seed = 7,
                           double eps = 1e-5) {
  const auto eval = [&]() {
    Rng rng(dropout_seed);
    Tensor out = net.forward(input, training, &rng);
    return loss_of_output(out).loss;
  };
  net.zero_grad();
  {
    Rng rng(dropout_seed);
    Tensor out = net.forward(input, training, &rng);
    auto lg = loss_of_output(out);
    net.backward(lg.grad);
  }
  const std::vector<ParamView> params = net.params();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const ParamView& pv : params)
    analytic.emplace_back(pv.grad.begin(), pv.grad.end());
  return grad_check_params(params, analytic, eval, eps);
}

}  // namespace bdn
