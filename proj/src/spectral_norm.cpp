#include "jsi/spectral_norm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace jsi {
namespace {

template <typename T>
void check(const Tensor<T>& w, const SpectralState<T>& st) {
  const std::size_t rows = w.shape().n;
  if (rows == 0 || st.u.size() != rows || st.v.size() * rows != w.size())
    throw std::invalid_argument("spectral state does not match weight " + w.shape().str());
}

template <typename T>
void normalize(Tensor<T>& x) {
  double sq = 0;
  for (T e : x.values()) sq += static_cast<double>(e) * e;
  const double norm = std::sqrt(sq);
  if (norm < kSigmaFloor) return;  // zero matrix: keep the previous direction
  for (auto& e : x.values()) e = static_cast<T>(e / norm);
}

}  // namespace

template <typename T>
SpectralState<T> make_spectral_state(const Shape& weight, Rng& rng) {
  const int rows = weight.n;
  const int cols = weight.c * weight.h * weight.w;
  SpectralState<T> st{normal_tensor<T>(Shape{1, rows, 1, 1}, rng),
                      normal_tensor<T>(Shape{1, cols, 1, 1}, rng)};
  normalize(st.u);
  normalize(st.v);
  return st;
}

template <typename T>
T spectral_sigma(const Tensor<T>& w, const SpectralState<T>& st) {
  check(w, st);
  const std::size_t rows = st.u.size(), cols = st.v.size();
  double acc = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    double row = 0;
    const T* wr = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row += static_cast<double>(wr[c]) * st.v[c];
    acc += row * st.u[r];
  }
  return static_cast<T>(std::max(acc, kSigmaFloor));
}

template <typename T>
T power_iteration(const Tensor<T>& w, SpectralState<T>& st, int iterations) {
  check(w, st);
  const std::size_t rows = st.u.size(), cols = st.v.size();
  std::vector<double> acc;
  for (int it = 0; it < iterations; ++it) {
    acc.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double ur = st.u[r];
      const T* wr = w.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) acc[c] += ur * wr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) st.v[c] = static_cast<T>(acc[c]);
    normalize(st.v);
    for (std::size_t r = 0; r < rows; ++r) {
      double row = 0;
      const T* wr = w.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) row += static_cast<double>(wr[c]) * st.v[c];
      st.u[r] = static_cast<T>(row);
    }
    normalize(st.u);
  }
  return spectral_sigma(w, st);
}

template <typename T>
Var<T> spectral_normalize(const Var<T>& weight, const SpectralState<T>& state) {
  const T sigma = spectral_sigma(weight.value(), state);
  Tensor<T> out = weight.value();
  for (auto& e : out.values()) e /= sigma;
  return make_result<T>(std::move(out), {weight}, [sigma, u = state.u, v = state.v](Node<T>& n) {
    const Tensor<T>& w = n.parents[0]->value;
    const Tensor<T>& g = n.grad;
    double inner = 0;
    for (std::size_t i = 0; i < g.size(); ++i) inner += static_cast<double>(g[i]) * w[i];
    const double coef = inner / (static_cast<double>(sigma) * sigma);
    Tensor<T>& gw = n.parents[0]->grad_buffer();
    const std::size_t rows = u.size(), cols = v.size();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        gw[i] += static_cast<T>(g[i] / sigma - coef * u[r] * v[c]);
      }
  });
}

#define JSI_INSTANTIATE(T)                                                         \
  template SpectralState<T> make_spectral_state<T>(const Shape&, Rng&);            \
  template T power_iteration<T>(const Tensor<T>&, SpectralState<T>&, int);         \
  template T spectral_sigma<T>(const Tensor<T>&, const SpectralState<T>&);         \
  template Var<T> spectral_normalize<T>(const Var<T>&, const SpectralState<T>&);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi
