#pragma once

#include <string>

#include "jsi/ops.hpp"

namespace jsi {

enum class DecompositionMode { division, subtraction };

std::string to_string(DecompositionMode m);
DecompositionMode decomposition_mode_from_string(const std::string& s);

struct GuidedFilterParams {
  int radius = 5;
  double eps = 0.01;
};

/// Added to the base before dividing.
inline constexpr double kDetailDenominatorEps = 1e-15;

/// Self-guided filter per channel:
///   a = var / (var + eps), b = (1 - a) * mean, out = box(a) * x + box(b)
/// with replicate-border box means. Built from differentiable ops.
template <typename T>
Var<T> guided_filter(const Var<T>& x, GuidedFilterParams params = {});

template <typename T>
struct Decomposition {
  Var<T> base;
  Var<T> detail;
  DecompositionMode mode = DecompositionMode::division;
};

/// base = guided_filter(x); detail = x / (base + 1e-15) or x - base.
template <typename T>
Decomposition<T> decompose(const Var<T>& x, DecompositionMode mode = DecompositionMode::division,
                           GuidedFilterParams params = {});

}  // namespace jsi
