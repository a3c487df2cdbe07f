#pragma once

#include <stdexcept>
#include <string>

#include "jsi/parameter.hpp"

namespace jsi {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

/// A non-finite value was found; the message names the offending tensor.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bias-corrected Adam update of every parameter in `store`. Parameters
/// without a gradient are treated as having a zero gradient. All gradients
/// are validated before anything is modified.
template <typename T>
void adam_step(ParameterStore<T>& store, double lr, const AdamOptions& opt = {});

/// Throws NumericalError naming the first parameter whose gradient is not finite.
template <typename T>
void check_gradients(ParameterStore<T>& store);

}  // namespace jsi
