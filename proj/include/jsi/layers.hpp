#pragma once

#include <string>

#include "jsi/ops.hpp"
#include "jsi/parameter.hpp"

namespace jsi {

template <typename T>
struct Conv {
  Var<T> weight;  // [c_out, c_in, k, k]
  Var<T> bias;    // [1, c_out, 1, 1]
  int stride = 1;
  int pad = 1;

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, weight, bias, stride, pad); }
};

/// Xavier-uniform weight and zero bias registered as `<name>.weight` / `<name>.bias`.
template <typename T>
Conv<T> make_conv(ParameterStore<T>& store, Rng& rng, const std::string& name, int c_in,
                  int c_out, int k, int stride = 1, int pad = -1) {
  Conv<T> c;
  c.weight = store.add(name + ".weight", xavier_init<T>(Shape{c_out, c_in, k, k}, rng));
  c.bias = store.add(name + ".bias", Tensor<T>(Shape{1, c_out, 1, 1}));
  c.stride = stride;
  c.pad = pad < 0 ? k / 2 : pad;
  return c;
}

}  // namespace jsi
