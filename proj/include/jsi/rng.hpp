#pragma once

#include <cstdint>
#include <random>

#include "jsi/tensor.hpp"

namespace jsi {

/// Seeded generator with portable real-valued draws.
///
/// std::mt19937_64 is bit-exact across standard libraries, but the
/// std::*_distribution adaptors are not, so the conversions live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Child seed for stream `index` of `seed`; independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

template <typename T>
Tensor<T> uniform_tensor(Shape shape, Rng& rng, double lo, double hi) {
  Tensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
Tensor<T> normal_tensor(Shape shape, Rng& rng, double stddev = 1.0) {
  Tensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(stddev * rng.normal());
  return t;
}

}  // namespace jsi
