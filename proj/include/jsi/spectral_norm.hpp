#pragma once

#include "jsi/autograd.hpp"
#include "jsi/rng.hpp"

namespace jsi {

/// Persistent power-iteration vectors for a weight viewed as an
/// (out x rest) matrix, rest = c*h*w.
template <typename T>
struct SpectralState {
  Tensor<T> u;  // [1, out, 1, 1]
  Tensor<T> v;  // [1, rest, 1, 1]
};

inline constexpr double kSigmaFloor = 1e-12;

/// Random unit vectors for a weight of the given shape.
template <typename T>
SpectralState<T> make_spectral_state(const Shape& weight, Rng& rng);

/// Runs `iterations` rounds of v <- W^T u / |W^T u|, u <- W v / |W v| and
/// returns the estimate u^T W v (floored).
template <typename T>
T power_iteration(const Tensor<T>& weight, SpectralState<T>& state, int iterations);

/// u^T W v with the current vectors, floored at kSigmaFloor.
template <typename T>
T spectral_sigma(const Tensor<T>& weight, const SpectralState<T>& state);

/// weight / sigma. The vectors are held fixed, so the gradient is
/// G / sigma - (<G, W> / sigma^2) u v^T.
template <typename T>
Var<T> spectral_normalize(const Var<T>& weight, const SpectralState<T>& state);

}  // namespace jsi
