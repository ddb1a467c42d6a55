#include "fdq/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace fdq {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t s : shape) p *= s;
  return p;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_)
    : shape(std::move(shape_)), data(shape_product(shape), 0.0) {
  for (std::size_t s : shape) {
    if (s == 0) throw DimensionError("tensor: zero-length dimension");
  }
}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (shape_product(shape) != data.size()) {
    throw DimensionError("tensor: shape does not match data length");
  }
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2) {
    throw DimensionError("matmul: operands must be rank-2");
  }
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  if (b.shape[0] != k) throw DimensionError("matmul: inner dimensions disagree");

  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValueError("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw ValueError("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * n));
  if (rank < 1) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor div_eps(const Tensor& a, const Tensor& b, double eps) {
  require_same_shape(a, b, "div_eps");
  if (!(eps > 0.0)) throw ValueError("div_eps: eps must be positive");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / std::max(b[i], eps);
  return out;
}

Tensor square(const Tensor& a) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * a[i];
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return out;
}

Tensor relu_grad(const Tensor& a) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0.0 ? 1.0 : 0.0;
  return out;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t z = seed_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::normal() {
  for (;;) {
    const double u = 2.0 * uniform01() - 1.0;
    const double v = 2.0 * uniform01() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ValueError("Rng::below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

}  // namespace fdq
