#include "jsi/kernels.hpp"

namespace jsi::kernels::reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* weight,
                    const T* bias, T* y) {
  const int ho = g.h_out(), wo = g.w_out();
  for (int n = 0; n < g.n; ++n)
    for (int o = 0; o < g.c_out; ++o)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          T acc = bias ? bias[o] : T(0);
          for (int c = 0; c < g.c_in; ++c)
            for (int ki = 0; ki < g.k; ++ki)
              for (int kj = 0; kj < g.k; ++kj) {
                const int iy = oy * g.stride - g.pad + ki;
                const int ix = ox * g.stride - g.pad + kj;
                if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) continue;
                acc += weight[((o * g.c_in + c) * g.k + ki) * g.k + kj] *
                       x[((n * g.c_in + c) * g.h + iy) * g.w + ix];
              }
          y[((n * g.c_out + o) * ho + oy) * wo + ox] = acc;
        }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* x, const T* weight,
                     const T* gy, T* gx, T* gweight, T* gbias) {
  const int ho = g.h_out(), wo = g.w_out();
  for (int n = 0; n < g.n; ++n)
    for (int o = 0; o < g.c_out; ++o)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          const T go = gy[((n * g.c_out + o) * ho + oy) * wo + ox];
          if (gbias) gbias[o] += go;
          for (int c = 0; c < g.c_in; ++c)
            for (int ki = 0; ki < g.k; ++ki)
              for (int kj = 0; kj < g.k; ++kj) {
                const int iy = oy * g.stride - g.pad + ki;
                const int ix = ox * g.stride - g.pad + kj;
                if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) continue;
                const std::size_t wi = ((o * g.c_in + c) * g.k + ki) * g.k + kj;
                const std::size_t xi = ((n * g.c_in + c) * g.h + iy) * g.w + ix;
                if (gweight) gweight[wi] += go * x[xi];
                if (gx) gx[xi] += go * weight[wi];
              }
        }
}

template <typename T>
void box_filter_forward(int planes, int h, int w, int radius, const T* x, T* y) {
  const T norm = T(1) / static_cast<T>((2 * radius + 1) * (2 * radius + 1));
  for (int p = 0; p < planes; ++p) {
    const T* src = x + static_cast<std::size_t>(p) * h * w;
    T* dst = y + static_cast<std::size_t>(p) * h * w;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        T acc = 0;
        for (int di = -radius; di <= radius; ++di)
          for (int dj = -radius; dj <= radius; ++dj)
            acc += src[clamp_index(i + di, h) * w + clamp_index(j + dj, w)];
        dst[i * w + j] = acc * norm;
      }
  }
}

template <typename T>
void box_filter_backward(int planes, int h, int w, int radius, const T* gy, T* gx) {
  const T norm = T(1) / static_cast<T>((2 * radius + 1) * (2 * radius + 1));
  for (int p = 0; p < planes; ++p) {
    const T* src = gy + static_cast<std::size_t>(p) * h * w;
    T* dst = gx + static_cast<std::size_t>(p) * h * w;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        for (int di = -radius; di <= radius; ++di)
          for (int dj = -radius; dj <= radius; ++dj)
            dst[clamp_index(i + di, h) * w + clamp_index(j + dj, w)] +=
                src[i * w + j] * norm;
  }
}

#define JSI_INSTANTIATE(T)                                                        \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*,        \
                                  const T*, T*);                                  \
  template void conv2d_backward<T>(const ConvGeometry&, const T*, const T*,       \
                                   const T*, T*, T*, T*);                         \
  template void box_filter_forward<T>(int, int, int, int, const T*, T*);          \
  template void box_filter_backward<T>(int, int, int, int, const T*, T*);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi::kernels::reference
