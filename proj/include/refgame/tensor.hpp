#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace refgame {

inline std::string shape_string(const std::vector<long>& s);

/// Dense row-major array of doubles, rank 1 or 2. All continuous
/// quantities in the library (embeddings, recurrent states, logits,
/// gradients) live in these.
struct Tensor {
  std::vector<long> shape;
  std::vector<double> v;
  bool requires_grad = false;

  Tensor() = default;

  explicit Tensor(std::vector<long> s, double fill = 0.0) : shape(std::move(s)) {
    if (shape.empty() || shape.size() > 2)
      throw std::invalid_argument("tensor rank must be 1 or 2, got " + shape_string(shape));
    v.assign(static_cast<std::size_t>(count(shape)), fill);
  }

  Tensor(std::initializer_list<double> vals) : shape{static_cast<long>(vals.size())}, v(vals) {}

  static long count(const std::vector<long>& s) {
    long n = 1;
    for (long d : s) {
      if (d <= 0) throw std::invalid_argument("tensor dimension must be positive");
      n *= d;
    }
    return n;
  }

  long size() const { return static_cast<long>(v.size()); }
  long rows() const { return shape.empty() ? 1 : shape[0]; }
  long cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& operator[](long i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](long i) const { return v[static_cast<std::size_t>(i)]; }

  double& at(long r, long c) { return v[static_cast<std::size_t>(r * cols() + c)]; }
  double at(long r, long c) const { return v[static_cast<std::size_t>(r * cols() + c)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

inline std::string shape_string(const std::vector<long>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

}  // namespace refgame
