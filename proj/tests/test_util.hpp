#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "jsi/rng.hpp"
#include "jsi/tensor.hpp"

namespace testutil {

inline jsi::Tensor<double> random(jsi::Shape s, std::uint64_t seed, double lo = -1.0,
                                  double hi = 1.0) {
  jsi::Rng rng(seed);
  return jsi::uniform_tensor<double>(s, rng, lo, hi);
}

inline bool bit_equal(const jsi::Tensor<double>& a, const jsi::Tensor<double>& b) {
  if (!(a.shape() == b.shape())) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

template <typename T>
bool bit_equal_t(const jsi::Tensor<T>& a, const jsi::Tensor<T>& b) {
  if (!(a.shape() == b.shape())) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("jsi_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
