#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace sebm {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;

using Rng = std::mt19937_64;

// Dense row-major matrix of doubles. Small helper; no linear algebra needed.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// Flat 3-d tensor, index order (i, j, k) with k fastest.
struct Tensor3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
      : d0(a), d1(b), d2(c), data(a * b * c, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * d1 + j) * d2 + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * d1 + j) * d2 + k];
  }

  std::span<double> slice(std::size_t i, std::size_t j) {
    return {data.data() + (i * d1 + j) * d2, d2};
  }
  std::span<const double> slice(std::size_t i, std::size_t j) const {
    return {data.data() + (i * d1 + j) * d2, d2};
  }
};

// log(sum(exp(x))) with max-shift; -inf entries are skipped.
inline double logsumexp(std::span<const double> x) {
  double m = kNegInf;
  for (double v : x)
    if (v > m) m = v;
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : x)
    if (v != kNegInf) s += std::exp(v - m);
  return m + std::log(s);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Child stream seed for replicate/fold/worker `index` under `role`.
// Mixing the role tag keeps sibling streams uncorrelated.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view role,
                                 std::uint64_t index) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : role) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return splitmix64(splitmix64(root ^ h) ^ index);
}

inline std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0)) throw std::domain_error("sample_dirichlet: alpha must be positive");
    std::gamma_distribution<double> g(alpha[i], 1.0);
    out[i] = g(rng);
    total += out[i];
  }
  if (total <= 0.0) {  // all gamma draws underflowed
    for (double& v : out) v = 1.0 / static_cast<double>(out.size());
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

inline std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng), acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace sebm
