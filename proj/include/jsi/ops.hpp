#pragma once

// Differentiable building blocks. All tensors are NCHW; elementwise binary
// ops require identical shapes (no general broadcasting).

#include "jsi/autograd.hpp"

namespace jsi {

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> div(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> add_scalar(const Var<T>& x, T c);
template <typename T> Var<T> scale(const Var<T>& x, T c);
/// x + s for a one-element `s`.
template <typename T> Var<T> add_broadcast(const Var<T>& x, const Var<T>& s);

template <typename T> Var<T> relu(const Var<T>& x);
template <typename T> Var<T> leaky_relu(const Var<T>& x, T slope = T(0.2));
template <typename T> Var<T> sigmoid(const Var<T>& x);
template <typename T> Var<T> square(const Var<T>& x);
template <typename T> Var<T> abs(const Var<T>& x);

/// Reductions to a [1,1,1,1] scalar.
template <typename T> Var<T> sum(const Var<T>& x);
template <typename T> Var<T> mean(const Var<T>& x);
/// mean((a - b)^2) over all elements.
template <typename T> Var<T> mse(const Var<T>& a, const Var<T>& b);

/// Cross-correlation; weight [c_out, c_in, k, k], bias [1, c_out, 1, 1] or undefined.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              int stride, int padding);

/// Affine map on the flattened sample: x [n, c, h, w] -> [n, out, 1, 1];
/// weight [out, c*h*w, 1, 1], bias [1, out, 1, 1].
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
};

template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;  // [1, c, 1, 1]
  Tensor<T> running_var;   // [1, c, 1, 1]
  explicit BatchNormStats(int channels = 0)
      : running_mean(Shape{1, channels, 1, 1}, T(0)),
        running_var(Shape{1, channels, 1, 1}, T(1)) {}
};

/// Per-channel normalization over (n, h, w). Train mode uses batch statistics
/// (biased variance) and updates `stats` with the unbiased variance; inference
/// mode uses `stats`. Train mode rejects a batch of one.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormStats<T>& stats, Mode mode, BatchNormOptions opt = {});

template <typename T> Var<T> pixel_shuffle(const Var<T>& x, int s);
template <typename T> Var<T> pixel_unshuffle(const Var<T>& x, int s);
template <typename T> Var<T> concat_channels(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);

/// Window mean of side 2r+1 with clamp-to-edge boundaries, per plane.
template <typename T> Var<T> box_filter(const Var<T>& x, int radius);

/// Leaf constant holding `value`.
template <typename T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}
template <typename T>
Var<T> scalar_constant(T v) {
  return Var<T>(Tensor<T>(Shape{1, 1, 1, 1}, v), false);
}

}  // namespace jsi
