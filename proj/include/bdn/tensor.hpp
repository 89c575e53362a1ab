#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdn {

/// Logical layout of every value flowing through the networks:
/// (batch, channels, height, width), row-major.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }
};

/// Dense 4-D array of 64-bit floats with an optional same-shape gradient
/// buffer. Plain value type: copying copies the data.
class Tensor {
 public:
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until ensure_grad()

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0)
      : shape(s), data(s.size(), fill) {
    if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0)
      throw std::invalid_argument("Tensor: non-positive shape " + s.str());
  }

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

  std::size_t size() const { return data.size(); }

  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape.c + c) * shape.h + h) *
               shape.w +
           w;
  }
  double& at(int n, int c, int h, int w) { return data[index(n, c, h, w)]; }
  double at(int n, int c, int h, int w) const {
    return data[index(n, c, h, w)];
  }

  double* plane(int n, int c) { return data.data() + index(n, c, 0, 0); }
  const double* plane(int n, int c) const {
    return data.data() + index(n, c, 0, 0);
  }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() {
    if (!grad.empty()) grad.assign(grad.size(), 0.0);
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_shape(const Tensor& t, const Shape& want,
                          const char* what) {
  if (!(t.shape == want))
    throw std::invalid_argument(std::string(what) + ": expected shape " +
                                want.str() + ", got " + t.shape.str());
}

}  // namespace bdn
