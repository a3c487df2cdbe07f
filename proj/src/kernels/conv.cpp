#include <Eigen/Core>
#include <vector>

#include "jsi/kernels.hpp"

namespace jsi::kernels {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// col[(c*k + ki)*k + kj][oy*wo + ox] = x[c][oy*stride - pad + ki][ox*stride - pad + kj]
template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* col) {
  const int ho = g.h_out(), wo = g.w_out();
  const std::size_t hw = static_cast<std::size_t>(ho) * wo;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < g.c_in; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        T* row = col + (static_cast<std::size_t>(c * g.k + ki) * g.k + kj) * hw;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          T* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= g.h) {
            for (int ox = 0; ox < wo; ++ox) dst[ox] = T(0);
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* gx) {
  const int ho = g.h_out(), wo = g.w_out();
  const std::size_t hw = static_cast<std::size_t>(ho) * wo;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < g.c_in; ++c) {
    T* plane = gx + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        const T* row = col + (static_cast<std::size_t>(c * g.k + ki) * g.k + kj) * hw;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * wo;
          T* dst = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* weight,
                    const T* bias, T* y) {
  const int ho = g.h_out(), wo = g.w_out();
  const Eigen::Index kdim = static_cast<Eigen::Index>(g.c_in) * g.k * g.k;
  const Eigen::Index hw = static_cast<Eigen::Index>(ho) * wo;
  std::vector<T> col(static_cast<std::size_t>(kdim * hw));
  ConstMatMap<T> w(weight, g.c_out, kdim);
  for (int n = 0; n < g.n; ++n) {
    im2col(g, x + static_cast<std::size_t>(n) * g.c_in * g.h * g.w, col.data());
    MatMap<T> out(y + static_cast<std::size_t>(n) * g.c_out * hw, g.c_out, hw);
    out.noalias() = w * ConstMatMap<T>(col.data(), kdim, hw);
    if (bias) {
      for (int o = 0; o < g.c_out; ++o) out.row(o).array() += bias[o];
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* x, const T* weight,
                     const T* gy, T* gx, T* gweight, T* gbias) {
  const int ho = g.h_out(), wo = g.w_out();
  const Eigen::Index kdim = static_cast<Eigen::Index>(g.c_in) * g.k * g.k;
  const Eigen::Index hw = static_cast<Eigen::Index>(ho) * wo;
  std::vector<T> col(static_cast<std::size_t>(kdim * hw));
  ConstMatMap<T> w(weight, g.c_out, kdim);
  for (int n = 0; n < g.n; ++n) {
    ConstMatMap<T> grad_out(gy + static_cast<std::size_t>(n) * g.c_out * hw,
                            g.c_out, hw);
    if (gbias) {
      // Plain loop: Eigen's vectorized sum peels by address, so the same
      // data at a different alignment can round differently.
      for (int o = 0; o < g.c_out; ++o) {
        const T* row = gy + (static_cast<std::size_t>(n) * g.c_out + o) * hw;
        T acc = 0;
        for (Eigen::Index i = 0; i < hw; ++i) acc += row[i];
        gbias[o] += acc;
      }
    }
    if (gweight) {
      im2col(g, x + static_cast<std::size_t>(n) * g.c_in * g.h * g.w, col.data());
      MatMap<T> gw(gweight, g.c_out, kdim);
      gw.noalias() += grad_out * ConstMatMap<T>(col.data(), kdim, hw).transpose();
    }
    if (gx) {
      MatMap<T> gcol(col.data(), kdim, hw);
      gcol.noalias() = w.transpose() * grad_out;
      col2im_add(g, col.data(), gx + static_cast<std::size_t>(n) * g.c_in * g.h * g.w);
    }
  }
}

template <typename T>
void linear_forward(int n, int in, int out, const T* x, const T* weight,
                    const T* bias, T* y) {
  ConstMatMap<T> xs(x, n, in);
  ConstMatMap<T> w(weight, out, in);
  MatMap<T> ys(y, n, out);
  ys.noalias() = xs * w.transpose();
  if (bias) {
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < out; ++o) ys(i, o) += bias[o];
  }
}

template <typename T>
void linear_backward(int n, int in, int out, const T* x, const T* weight,
                     const T* gy, T* gx, T* gweight, T* gbias) {
  ConstMatMap<T> grad_out(gy, n, out);
  if (gx) {
    MatMap<T> g(gx, n, in);
    g.noalias() += grad_out * ConstMatMap<T>(weight, out, in);
  }
  if (gweight) {
    MatMap<T> g(gweight, out, in);
    g.noalias() += grad_out.transpose() * ConstMatMap<T>(x, n, in);
  }
  if (gbias) {
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < out; ++o) gbias[o] += grad_out(i, o);
  }
}

#define JSI_INSTANTIATE(T)                                                        \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*,        \
                                  const T*, T*);                                  \
  template void conv2d_backward<T>(const ConvGeometry&, const T*, const T*,       \
                                   const T*, T*, T*, T*);                         \
  template void linear_forward<T>(int, int, int, const T*, const T*, const T*, T*); \
  template void linear_backward<T>(int, int, int, const T*, const T*, const T*,   \
                                   T*, T*, T*);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi::kernels
