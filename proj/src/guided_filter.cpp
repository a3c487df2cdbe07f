#include "jsi/guided_filter.hpp"

#include <algorithm>
#include <stdexcept>

namespace jsi {

std::string to_string(DecompositionMode m) {
  return m == DecompositionMode::division ? "division" : "subtraction";
}

DecompositionMode decomposition_mode_from_string(const std::string& s) {
  if (s == "division") return DecompositionMode::division;
  if (s == "subtraction") return DecompositionMode::subtraction;
  throw std::invalid_argument("unknown decomposition mode: " + s);
}

template <typename T>
Var<T> guided_filter(const Var<T>& x, GuidedFilterParams params) {
  const Shape s = x.shape();
  if (params.radius < 1) throw std::invalid_argument("guided_filter: radius must be >= 1");
  if (!(params.eps > 0)) throw std::invalid_argument("guided_filter: eps must be > 0");
  if (2 * params.radius > std::min(s.h, s.w))
    throw std::invalid_argument("guided_filter: radius " + std::to_string(params.radius) +
                                " exceeds half the image side of " + s.str());
  const int r = params.radius;
  Var<T> mu = box_filter(x, r);
  Var<T> corr = box_filter(square(x), r);
  // Clamped at zero so rounding on flat regions cannot produce a negative a.
  Var<T> var = relu(sub(corr, square(mu)));
  Var<T> a = div(var, add_scalar(var, static_cast<T>(params.eps)));
  Var<T> b = sub(mu, mul(a, mu));
  return add(mul(box_filter(a, r), x), box_filter(b, r));
}

template <typename T>
Decomposition<T> decompose(const Var<T>& x, DecompositionMode mode, GuidedFilterParams params) {
  Decomposition<T> d;
  d.mode = mode;
  d.base = guided_filter(x, params);
  if (mode == DecompositionMode::division)
    d.detail = div(x, add_scalar(d.base, static_cast<T>(kDetailDenominatorEps)));
  else
    d.detail = sub(x, d.base);
  return d;
}

template Var<float> guided_filter(const Var<float>&, GuidedFilterParams);
template Var<double> guided_filter(const Var<double>&, GuidedFilterParams);
template Decomposition<float> decompose(const Var<float>&, DecompositionMode, GuidedFilterParams);
template Decomposition<double> decompose(const Var<double>&, DecompositionMode,
                                         GuidedFilterParams);

}  // namespace jsi
