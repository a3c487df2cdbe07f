#include "jsi/adam.hpp"

#include <cmath>

namespace jsi {

template <typename T>
void check_gradients(ParameterStore<T>& store) {
  for (auto& p : store.params())
    if (p.var.has_grad() && !p.var.grad().all_finite())
      throw NumericalError("non-finite gradient in parameter " + p.name);
}

template <typename T>
void adam_step(ParameterStore<T>& store, double lr, const AdamOptions& opt) {
  check_gradients(store);
  double clip = 1.0;
  if (opt.clip_norm > 0) {
    double sq = 0;
    for (auto& p : store.params())
      if (p.var.has_grad())
        for (T g : p.var.grad().values()) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (norm > opt.clip_norm) clip = opt.clip_norm / norm;
  }
  for (auto& p : store.params()) {
    const bool has = p.var.has_grad();
    const std::int64_t t = ++p.step;
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
    Tensor<T>& w = p.value_mut();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = has ? clip * static_cast<double>(p.var.grad()[i]) : 0.0;
      const double m = opt.beta1 * p.m[i] + (1.0 - opt.beta1) * g;
      const double v = opt.beta2 * p.v[i] + (1.0 - opt.beta2) * g * g;
      p.m[i] = static_cast<T>(m);
      p.v[i] = static_cast<T>(v);
      w[i] = static_cast<T>(w[i] - lr * (m / c1) / (std::sqrt(v / c2) + opt.eps));
    }
  }
}

template void adam_step<float>(ParameterStore<float>&, double, const AdamOptions&);
template void adam_step<double>(ParameterStore<double>&, double, const AdamOptions&);
template void check_gradients<float>(ParameterStore<float>&);
template void check_gradients<double>(ParameterStore<double>&);

}  // namespace jsi
