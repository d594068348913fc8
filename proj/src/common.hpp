#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rumboost {

// Error categories, mapped one-to-one onto process exit codes by the C API
// and the CLI (config -> 2, data -> 3, numeric -> 4).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic random source. The engine (mt19937_64) has a sequence fixed
/// by the standard; the bounded/real mappings are implemented here because
/// std::uniform_*_distribution is implementation-defined and would break
/// byte-identical artifacts across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Unbiased uniform draw in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw NumericError("Rng::below: n must be positive");
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

  // Inclusive integer range.
  int64_t range(int64_t lo, int64_t hi) {
    if (hi < lo) throw NumericError("Rng::range: empty range");
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Dense row-major matrix of doubles.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return data[r * cols + c]; }

  std::span<double> row(size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(size_t r) const { return {data.data() + r * cols, cols}; }
};

// Shortest decimal form that parses back to the same double. Used everywhere
// a floating value is written to a text artifact, so reload is bit-exact.
std::string format_double(double v);

// 64-bit FNV-1a as a lowercase hex string; stable across platforms.
std::string fnv1a_hex(const std::string& text);

std::vector<std::string> split_string(const std::string& s, char sep);

}  // namespace rumboost
