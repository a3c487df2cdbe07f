#include "jsi/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "jsi/kernels.hpp"

namespace jsi {
namespace {

template <typename T>
Node<T>& parent(Node<T>& n, std::size_t i) {
  return *n.parents[i];
}

template <typename T>
bool wants(const Node<T>& n, std::size_t i) {
  return n.parents[i]->requires_grad;
}

// out[i] = f(a[i]); backward: ga[i] += g[i] * df(a[i], out[i])
template <typename T, typename F, typename DF>
Var<T> unary(const Var<T>& x, F f, DF df) {
  const Tensor<T>& in = x.value();
  Tensor<T> out(in.shape());
  const std::size_t size = in.size();
  const T* src = in.data();
  T* dst = out.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < size; ++i) dst[i] = f(src[i]);
  return make_result<T>(std::move(out), {x}, [df](Node<T>& n) {
    Node<T>& p = parent(n, 0);
    const T* a = p.value.data();
    const T* y = n.value.data();
    const T* g = n.grad.data();
    T* ga = p.grad_buffer().data();
    const std::size_t size = n.value.size();
#pragma omp parallel for simd schedule(static)
    for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * df(a[i], y[i]);
  });
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out = a.value();
  const T* bv = b.value().data();
  T* o = out.data();
  const std::size_t size = out.size();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < size; ++i) o[i] += bv[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    const std::size_t size = n.grad.size();
    const T* g = n.grad.data();
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants(n, k)) continue;
      T* gp = parent(n, k).grad_buffer().data();
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < size; ++i) gp[i] += g[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<T> out = a.value();
  const T* bv = b.value().data();
  T* o = out.data();
  const std::size_t size = out.size();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < size; ++i) o[i] -= bv[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    const std::size_t size = n.grad.size();
    const T* g = n.grad.data();
    if (wants(n, 0)) {
      T* gp = parent(n, 0).grad_buffer().data();
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < size; ++i) gp[i] += g[i];
    }
    if (wants(n, 1)) {
      T* gp = parent(n, 1).grad_buffer().data();
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < size; ++i) gp[i] -= g[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<T> out = a.value();
  const T* bv = b.value().data();
  T* o = out.data();
  const std::size_t size = out.size();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < size; ++i) o[i] *= bv[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    const std::size_t size = n.grad.size();
    const T* g = n.grad.data();
    const T* av = parent(n, 0).value.data();
    const T* bv = parent(n, 1).value.data();
    if (wants(n, 0)) {
      T* gp = parent(n, 0).grad_buffer().data();
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < size; ++i) gp[i] += g[i] * bv[i];
    }
    if (wants(n, 1)) {
      T* gp = parent(n, 1).grad_buffer().data();
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < size; ++i) gp[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "div");
  Tensor<T> out = a.value();
  const T* bv = b.value().data();
  T* o = out.data();
  const std::size_t size = out.size();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < size; ++i) o[i] /= bv[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    const std::size_t size = n.grad.size();
    const T* g = n.grad.data();
    const T* bv = parent(n, 1).value.data();
    const T* q = n.value.data();
    if (wants(n, 0)) {
      T* gp = parent(n, 0).grad_buffer().data();
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < size; ++i) gp[i] += g[i] / bv[i];
    }
    if (wants(n, 1)) {
      T* gp = parent(n, 1).grad_buffer().data();
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < size; ++i) gp[i] -= g[i] * q[i] / bv[i];
    }
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& x, T c) {
  return unary<T>(x, [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <typename T>
Var<T> scale(const Var<T>& x, T c) {
  return unary<T>(x, [c](T v) { return v * c; }, [c](T, T) { return c; });
}

template <typename T>
Var<T> add_broadcast(const Var<T>& x, const Var<T>& s) {
  if (s.value().size() != 1)
    throw std::invalid_argument("add_broadcast: expected one-element operand, got " +
                                s.shape().str());
  Tensor<T> out = x.value();
  const T sv = s.value()[0];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sv;
  return make_result<T>(std::move(out), {x, s}, [](Node<T>& n) {
    const std::size_t size = n.grad.size();
    const T* g = n.grad.data();
    if (wants(n, 0)) {
      T* gp = parent(n, 0).grad_buffer().data();
      for (std::size_t i = 0; i < size; ++i) gp[i] += g[i];
    }
    if (wants(n, 1)) {
      double acc = 0;
      for (std::size_t i = 0; i < size; ++i) acc += g[i];
      parent(n, 1).grad_buffer()[0] += static_cast<T>(acc);
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T a, T) { return a > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return unary<T>(
      x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T a, T) { return a > T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> square(const Var<T>& x) {
  return unary<T>(x, [](T v) { return v * v; }, [](T a, T) { return T(2) * a; });
}

template <typename T>
Var<T> abs(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return std::abs(v); },
      [](T a, T) { return a > T(0) ? T(1) : (a < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  double acc = 0;
  for (T v : x.value().values()) acc += v;
  Tensor<T> out(Shape{1, 1, 1, 1}, static_cast<T>(acc));
  return make_result<T>(std::move(out), {x}, [](Node<T>& n) {
    const T g = n.grad[0];
    auto& gp = parent(n, 0).grad_buffer();
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g;
  });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  const std::size_t count = x.value().size();
  if (count == 0) throw std::invalid_argument("mean of empty tensor");
  double acc = 0;
  for (T v : x.value().values()) acc += v;
  Tensor<T> out(Shape{1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(count)));
  return make_result<T>(std::move(out), {x}, [count](Node<T>& n) {
    const T g = n.grad[0] / static_cast<T>(count);
    auto& gp = parent(n, 0).grad_buffer();
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g;
  });
}

template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  const std::size_t count = a.value().size();
  if (count == 0) throw std::invalid_argument("mse of empty tensors");
  double acc = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(a.value()[i]) - static_cast<double>(b.value()[i]);
    acc += d * d;
  }
  Tensor<T> out(Shape{1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(count)));
  return make_result<T>(std::move(out), {a, b}, [count](Node<T>& n) {
    const T g = T(2) * n.grad[0] / static_cast<T>(count);
    const T* av = parent(n, 0).value.data();
    const T* bv = parent(n, 1).value.data();
    if (wants(n, 0)) {
      T* gp = parent(n, 0).grad_buffer().data();
      for (std::size_t i = 0; i < count; ++i) gp[i] += g * (av[i] - bv[i]);
    }
    if (wants(n, 1)) {
      T* gp = parent(n, 1).grad_buffer().data();
      for (std::size_t i = 0; i < count; ++i) gp[i] -= g * (av[i] - bv[i]);
    }
  });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              int stride, int padding) {
  const Shape xs = x.shape(), ws = weight.shape();
  if (stride < 1 || padding < 0)
    throw std::invalid_argument("conv2d: stride must be >= 1 and padding >= 0");
  if (ws.h != ws.w || xs.c != ws.c)
    throw std::invalid_argument("conv2d: input " + xs.str() + " incompatible with weight " +
                                ws.str());
  if (bias.defined() && bias.value().size() != static_cast<std::size_t>(ws.n))
    throw std::invalid_argument("conv2d: bias " + bias.shape().str() + " for weight " +
                                ws.str());
  kernels::ConvGeometry g{xs.n, xs.c, xs.h, xs.w, ws.n, ws.h, stride, padding};
  if (g.h_out() < 1 || g.w_out() < 1)
    throw std::invalid_argument("conv2d: input " + xs.str() + " too small for weight " +
                                ws.str());
  Tensor<T> out(Shape{xs.n, ws.n, g.h_out(), g.w_out()});
  kernels::conv2d_forward<T>(g, x.value().data(), weight.value().data(),
                             bias.defined() ? bias.value().data() : nullptr, out.data());
  std::vector<Var<T>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>(std::move(out), std::move(inputs), [g](Node<T>& n) {
    const bool has_bias = n.parents.size() > 2;
    kernels::conv2d_backward<T>(
        g, parent(n, 0).value.data(), parent(n, 1).value.data(), n.grad.data(),
        wants(n, 0) ? parent(n, 0).grad_buffer().data() : nullptr,
        wants(n, 1) ? parent(n, 1).grad_buffer().data() : nullptr,
        has_bias && wants(n, 2) ? parent(n, 2).grad_buffer().data() : nullptr);
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const Shape xs = x.shape(), ws = weight.shape();
  const int in = xs.c * xs.h * xs.w;
  if (static_cast<std::size_t>(ws.c) * ws.h * ws.w != static_cast<std::size_t>(in))
    throw std::invalid_argument("linear: input " + xs.str() + " incompatible with weight " +
                                ws.str());
  if (bias.defined() && bias.value().size() != static_cast<std::size_t>(ws.n))
    throw std::invalid_argument("linear: bias " + bias.shape().str() + " for weight " +
                                ws.str());
  const int n_items = xs.n, out_dim = ws.n;
  Tensor<T> out(Shape{n_items, out_dim, 1, 1});
  kernels::linear_forward<T>(n_items, in, out_dim, x.value().data(), weight.value().data(),
                             bias.defined() ? bias.value().data() : nullptr, out.data());
  std::vector<Var<T>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>(std::move(out), std::move(inputs), [=](Node<T>& n) {
    const bool has_bias = n.parents.size() > 2;
    kernels::linear_backward<T>(
        n_items, in, out_dim, parent(n, 0).value.data(), parent(n, 1).value.data(),
        n.grad.data(), wants(n, 0) ? parent(n, 0).grad_buffer().data() : nullptr,
        wants(n, 1) ? parent(n, 1).grad_buffer().data() : nullptr,
        has_bias && wants(n, 2) ? parent(n, 2).grad_buffer().data() : nullptr);
  });
}

template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormStats<T>& stats, Mode mode, BatchNormOptions opt) {
  const Shape xs = x.shape();
  const int channels = xs.c;
  if (gamma.value().size() != static_cast<std::size_t>(channels) ||
      beta.value().size() != static_cast<std::size_t>(channels) ||
      stats.running_mean.size() != static_cast<std::size_t>(channels))
    throw std::invalid_argument("batch_norm: parameters do not match input " + xs.str());
  const std::size_t plane = xs.plane();
  const std::size_t count = static_cast<std::size_t>(xs.n) * plane;

  // xhat and the per-channel inverse std are kept for the backward pass.
  Tensor<T> xhat(xs);
  std::vector<T> inv_std(channels);
  const bool training = mode == Mode::train;
  if (training && xs.n < 2)
    throw std::invalid_argument("batch_norm: training mode needs a batch of at least 2, got " +
                                xs.str());

#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    double mu, var;
    if (training) {
      double acc = 0;
      for (int n = 0; n < xs.n; ++n) {
        const T* p = x.value().plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      }
      mu = acc / static_cast<double>(count);
      double sq = 0;
      for (int n = 0; n < xs.n; ++n) {
        const T* p = x.value().plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mu;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(count);
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      stats.running_mean[c] = static_cast<T>(opt.momentum * stats.running_mean[c] +
                                             (1.0 - opt.momentum) * mu);
      stats.running_var[c] = static_cast<T>(opt.momentum * stats.running_var[c] +
                                            (1.0 - opt.momentum) * unbiased);
    } else {
      mu = stats.running_mean[c];
      var = stats.running_var[c];
    }
    const double is = 1.0 / std::sqrt(var + opt.eps);
    inv_std[c] = static_cast<T>(is);
    for (int n = 0; n < xs.n; ++n) {
      const T* p = x.value().plane(n, c);
      T* q = xhat.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) q[i] = static_cast<T>((p[i] - mu) * is);
    }
  }

  Tensor<T> out(xs);
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < channels; ++c) {
      const T gm = gamma.value()[c], bt = beta.value()[c];
      const T* q = xhat.plane(n, c);
      T* o = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) o[i] = gm * q[i] + bt;
    }

  return make_result<T>(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), training, count, plane,
       xs](Node<T>& n) {
        const Tensor<T>& g = n.grad;
        const Tensor<T>& gm = parent(n, 1).value;
        T* gx = wants(n, 0) ? parent(n, 0).grad_buffer().data() : nullptr;
        T* ggamma = wants(n, 1) ? parent(n, 1).grad_buffer().data() : nullptr;
        T* gbeta = wants(n, 2) ? parent(n, 2).grad_buffer().data() : nullptr;
#pragma omp parallel for schedule(static)
        for (int c = 0; c < xs.c; ++c) {
          double sum_g = 0, sum_gx = 0;
          for (int b = 0; b < xs.n; ++b) {
            const T* gp = g.plane(b, c);
            const T* q = xhat.plane(b, c);
            for (std::size_t i = 0; i < plane; ++i) {
              sum_g += gp[i];
              sum_gx += static_cast<double>(gp[i]) * q[i];
            }
          }
          if (ggamma) ggamma[c] += static_cast<T>(sum_gx);
          if (gbeta) gbeta[c] += static_cast<T>(sum_g);
          if (!gx) continue;
          const double scale_c = static_cast<double>(gm[c]) * inv_std[c];
          const double mean_g = sum_g / static_cast<double>(count);
          const double mean_gx = sum_gx / static_cast<double>(count);
          for (int b = 0; b < xs.n; ++b) {
            const T* gp = g.plane(b, c);
            const T* q = xhat.plane(b, c);
            T* dst = gx + (static_cast<std::size_t>(b) * xs.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              if (training)
                dst[i] += static_cast<T>(scale_c * (gp[i] - mean_g - q[i] * mean_gx));
              else
                dst[i] += static_cast<T>(scale_c * gp[i]);
            }
          }
        }
      });
}

template <typename T>
Var<T> pixel_shuffle(const Var<T>& x, int s) {
  const Shape xs = x.shape();
  if (s < 1 || xs.c % (s * s) != 0)
    throw std::invalid_argument("pixel_shuffle: channels of " + xs.str() +
                                " not divisible by s^2 = " + std::to_string(s * s));
  Tensor<T> out(Shape{xs.n, xs.c / (s * s), xs.h * s, xs.w * s});
  kernels::pixel_shuffle<T>(xs, s, x.value().data(), out.data());
  return make_result<T>(std::move(out), {x}, [xs, s](Node<T>& n) {
    Tensor<T> g(xs);
    kernels::pixel_unshuffle<T>(xs, s, n.grad.data(), g.data());
    auto& gp = parent(n, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
  });
}

template <typename T>
Var<T> pixel_unshuffle(const Var<T>& x, int s) {
  const Shape xs = x.shape();
  if (s < 1 || xs.h % s != 0 || xs.w % s != 0)
    throw std::invalid_argument("pixel_unshuffle: spatial dims of " + xs.str() +
                                " not divisible by " + std::to_string(s));
  const Shape packed{xs.n, xs.c * s * s, xs.h / s, xs.w / s};
  Tensor<T> out(packed);
  kernels::pixel_unshuffle<T>(packed, s, x.value().data(), out.data());
  return make_result<T>(std::move(out), {x}, [xs, packed, s](Node<T>& n) {
    Tensor<T> g(xs);
    kernels::pixel_shuffle<T>(packed, s, n.grad.data(), g.data());
    auto& gp = parent(n, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
  });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape as = a.shape(), bs = b.shape();
  if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
    throw std::invalid_argument("concat_channels: shape mismatch " + as.str() + " vs " +
                                bs.str());
  Tensor<T> out(Shape{as.n, as.c + bs.c, as.h, as.w});
  const std::size_t ablock = static_cast<std::size_t>(as.c) * as.h * as.w;
  const std::size_t bblock = static_cast<std::size_t>(bs.c) * bs.h * bs.w;
  for (int n = 0; n < as.n; ++n) {
    std::copy_n(a.value().data() + n * ablock, ablock, out.data() + n * (ablock + bblock));
    std::copy_n(b.value().data() + n * bblock, bblock,
                out.data() + n * (ablock + bblock) + ablock);
  }
  return make_result<T>(std::move(out), {a, b}, [=](Node<T>& n) {
    const T* g = n.grad.data();
    for (int i = 0; i < as.n; ++i) {
      const T* gi = g + i * (ablock + bblock);
      if (wants(n, 0)) {
        T* ga = parent(n, 0).grad_buffer().data() + i * ablock;
        for (std::size_t k = 0; k < ablock; ++k) ga[k] += gi[k];
      }
      if (wants(n, 1)) {
        T* gb = parent(n, 1).grad_buffer().data() + i * bblock;
        for (std::size_t k = 0; k < bblock; ++k) gb[k] += gi[ablock + k];
      }
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(shape);
  return make_result<T>(std::move(out), {x}, [](Node<T>& n) {
    auto& gp = parent(n, 0).grad_buffer();
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += n.grad[i];
  });
}

template <typename T>
Var<T> box_filter(const Var<T>& x, int radius) {
  const Shape xs = x.shape();
  if (radius < 0) throw std::invalid_argument("box_filter: negative radius");
  Tensor<T> out(xs);
  const int planes = xs.n * xs.c;
  kernels::box_filter_forward<T>(planes, xs.h, xs.w, radius, x.value().data(), out.data());
  return make_result<T>(std::move(out), {x}, [planes, xs, radius](Node<T>& n) {
    kernels::box_filter_backward<T>(planes, xs.h, xs.w, radius, n.grad.data(),
                                    parent(n, 0).grad_buffer().data());
  });
}

#define JSI_INSTANTIATE(T)                                                                 \
  template Var<T> add(const Var<T>&, const Var<T>&);                                       \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                       \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                       \
  template Var<T> div(const Var<T>&, const Var<T>&);                                       \
  template Var<T> add_scalar(const Var<T>&, T);                                            \
  template Var<T> scale(const Var<T>&, T);                                                 \
  template Var<T> add_broadcast(const Var<T>&, const Var<T>&);                             \
  template Var<T> relu(const Var<T>&);                                                     \
  template Var<T> leaky_relu(const Var<T>&, T);                                            \
  template Var<T> sigmoid(const Var<T>&);                                                  \
  template Var<T> square(const Var<T>&);                                                   \
  template Var<T> abs(const Var<T>&);                                                      \
  template Var<T> sum(const Var<T>&);                                                      \
  template Var<T> mean(const Var<T>&);                                                     \
  template Var<T> mse(const Var<T>&, const Var<T>&);                                       \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int);           \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);                     \
  template Var<T> batch_norm(const Var<T>&, const Var<T>&, const Var<T>&,                  \
                             BatchNormStats<T>&, Mode, BatchNormOptions);                  \
  template Var<T> pixel_shuffle(const Var<T>&, int);                                       \
  template Var<T> pixel_unshuffle(const Var<T>&, int);                                     \
  template Var<T> concat_channels(const Var<T>&, const Var<T>&);                           \
  template Var<T> reshape(const Var<T>&, Shape);                                           \
  template Var<T> box_filter(const Var<T>&, int);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi
