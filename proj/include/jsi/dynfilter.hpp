#pragma once

#include "jsi/autograd.hpp"
#include "jsi/kernels.hpp"

namespace jsi {

/// Per-pixel vertical/horizontal 41-tap filters, one pair per sub-position.
/// Both fields are [n, 41*s*s, h, w]; channel 41*p + k is tap k of sub-position p.
template <typename T>
struct SeparableFilterField {
  Var<T> vertical;
  Var<T> horizontal;
  int scale = 1;
};

/// Per-pixel 9x9 filters, one per sub-position: [n, 81*s*s, h, w] with
/// channel 81*p + 9*i + j holding row i, column j.
template <typename T>
struct LocalFilterField2D {
  Var<T> coeffs;
  int scale = 1;
};

/// Vertical pass then horizontal pass per sub-position, replicate borders,
/// followed by the pixel shuffle: [n, c, h, w] -> [n, c, s*h, s*w]. The same
/// field filters every channel of x.
template <typename T>
Var<T> dynamic_separable_upsample(const Var<T>& x, const SeparableFilterField<T>& f);

/// 9x9 local filtering per sub-position, replicate borders, then pixel shuffle.
template <typename T>
Var<T> dynamic_2d_upsample(const Var<T>& x, const LocalFilterField2D<T>& f);

}  // namespace jsi
