#include "jsi/dynfilter.hpp"

#include <stdexcept>
#include <string>

namespace jsi {
namespace {

void check_field(const Shape& xs, const Shape& fs, int taps, int s, const char* what) {
  if (s < 1) throw std::invalid_argument(std::string(what) + ": scale must be >= 1");
  if (fs.n != xs.n || fs.h != xs.h || fs.w != xs.w || fs.c != taps * s * s)
    throw std::invalid_argument(std::string(what) + ": field " + fs.str() +
                                " does not match input " + xs.str() + " at scale " +
                                std::to_string(s));
}

}  // namespace

template <typename T>
Var<T> dynamic_separable_upsample(const Var<T>& x, const SeparableFilterField<T>& f) {
  const Shape xs = x.shape();
  const int s = f.scale;
  check_field(xs, f.vertical.shape(), kernels::kSeparableTaps, s, "dynamic_separable_upsample");
  check_field(xs, f.horizontal.shape(), kernels::kSeparableTaps, s,
              "dynamic_separable_upsample");
  Tensor<T> mid(Shape{xs.n, xs.c * s * s, xs.h, xs.w});
  Tensor<T> out(Shape{xs.n, xs.c, xs.h * s, xs.w * s});
  kernels::dynamic_separable_forward<T>(xs, s, x.value().data(), f.vertical.value().data(),
                                        f.horizontal.value().data(), mid.data(), out.data());
  return make_result<T>(
      std::move(out), {x, f.vertical, f.horizontal},
      [xs, s, mid = std::move(mid)](Node<T>& n) {
        auto grad_of = [&n](std::size_t i) {
          return n.parents[i]->requires_grad ? n.parents[i]->grad_buffer().data() : nullptr;
        };
        kernels::dynamic_separable_backward<T>(
            xs, s, n.parents[0]->value.data(), n.parents[1]->value.data(),
            n.parents[2]->value.data(), mid.data(), n.grad.data(), grad_of(0), grad_of(1),
            grad_of(2));
      });
}

template <typename T>
Var<T> dynamic_2d_upsample(const Var<T>& x, const LocalFilterField2D<T>& f) {
  const Shape xs = x.shape();
  const int s = f.scale;
  check_field(xs, f.coeffs.shape(), kernels::kLocalKernel * kernels::kLocalKernel, s,
              "dynamic_2d_upsample");
  Tensor<T> out(Shape{xs.n, xs.c, xs.h * s, xs.w * s});
  kernels::dynamic_2d_forward<T>(xs, s, x.value().data(), f.coeffs.value().data(), out.data());
  return make_result<T>(std::move(out), {x, f.coeffs}, [xs, s](Node<T>& n) {
    auto grad_of = [&n](std::size_t i) {
      return n.parents[i]->requires_grad ? n.parents[i]->grad_buffer().data() : nullptr;
    };
    kernels::dynamic_2d_backward<T>(xs, s, n.parents[0]->value.data(),
                                    n.parents[1]->value.data(), n.grad.data(), grad_of(0),
                                    grad_of(1));
  });
}

template Var<float> dynamic_separable_upsample(const Var<float>&,
                                               const SeparableFilterField<float>&);
template Var<double> dynamic_separable_upsample(const Var<double>&,
                                                const SeparableFilterField<double>&);
template Var<float> dynamic_2d_upsample(const Var<float>&, const LocalFilterField2D<float>&);
template Var<double> dynamic_2d_upsample(const Var<double>&, const LocalFilterField2D<double>&);

}  // namespace jsi
