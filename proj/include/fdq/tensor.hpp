#pragma once

#include <cstdint>
#include <vector>

#include "fdq/error.hpp"

namespace fdq {

// Dense row-major tensor of 64-bit floats. All reductions over it use a
// fixed left-to-right order so equal inputs give bit-identical outputs.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_);
  Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);

  static Tensor matrix(std::size_t r, std::size_t c) { return Tensor({r, c}); }
  static Tensor vector(std::size_t n) { return Tensor({n}); }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double operator[](std::size_t i) const { return data[i]; }
  double& operator[](std::size_t i) { return data[i]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols() + j]; }

  double* row(std::size_t i) { return data.data() + i * cols(); }
  const double* row(std::size_t i) const { return data.data() + i * cols(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  void fill(double v);
  void zero() { fill(0.0); }
};

// Standard matrix product with a fixed left-to-right dot-product order.
Tensor matmul(const Tensor& a, const Tensor& b);

// Nearest-rank-lower quantile: sort ascending, return the element at index
// max(ceil(q*N), 1) - 1. The result is always an attained value, so a
// score-to-threshold ratio of exactly 1.0 occurs on the boundary.
double quantile(std::vector<double> values, double q);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// a[i] / max(b[i], eps); never divides by zero.
Tensor div_eps(const Tensor& a, const Tensor& b, double eps);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor relu_grad(const Tensor& a);

// Counter-based deterministic generator (splitmix64). Identical seeds give
// identical sample streams regardless of platform or call site.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), counter_(0) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Standard normal via the polar method (one value per acceptance).
  double normal();
  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace fdq
