#include <vector>

#include "jsi/kernels.hpp"

namespace jsi::kernels {
namespace {

// Clamped 1-D window sum along a strided line.
template <typename T>
void window_sum(const T* src, T* dst, int len, std::size_t stride, int radius) {
  for (int i = 0; i < len; ++i) {
    T acc = 0;
    for (int d = -radius; d <= radius; ++d)
      acc += src[static_cast<std::size_t>(clamp_index(i + d, len)) * stride];
    dst[static_cast<std::size_t>(i) * stride] = acc;
  }
}

template <typename T>
void window_sum_adjoint(const T* src, T* dst, int len, std::size_t stride, int radius) {
  for (int i = 0; i < len; ++i) {
    const T g = src[static_cast<std::size_t>(i) * stride];
    for (int d = -radius; d <= radius; ++d)
      dst[static_cast<std::size_t>(clamp_index(i + d, len)) * stride] += g;
  }
}

}  // namespace

template <typename T>
void box_filter_forward(int planes, int h, int w, int radius, const T* x, T* y) {
  const T norm = T(1) / static_cast<T>((2 * radius + 1) * (2 * radius + 1));
  const std::size_t area = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    std::vector<T> rows(area);
    const T* src = x + p * area;
    T* dst = y + p * area;
    for (int i = 0; i < h; ++i)
      window_sum(src + static_cast<std::size_t>(i) * w, rows.data() + static_cast<std::size_t>(i) * w, w, 1, radius);
    for (int j = 0; j < w; ++j) window_sum(rows.data() + j, dst + j, h, w, radius);
    for (std::size_t i = 0; i < area; ++i) dst[i] *= norm;
  }
}

template <typename T>
void box_filter_backward(int planes, int h, int w, int radius, const T* gy, T* gx) {
  const T norm = T(1) / static_cast<T>((2 * radius + 1) * (2 * radius + 1));
  const std::size_t area = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    std::vector<T> cols(area, T(0));
    const T* src = gy + p * area;
    for (int j = 0; j < w; ++j) window_sum_adjoint(src + j, cols.data() + j, h, w, radius);
    for (std::size_t i = 0; i < area; ++i) cols[i] *= norm;
    T* dst = gx + p * area;
    for (int i = 0; i < h; ++i)
      window_sum_adjoint(cols.data() + static_cast<std::size_t>(i) * w, dst + static_cast<std::size_t>(i) * w, w, 1, radius);
  }
}

template <typename T>
void pixel_shuffle(const Shape& in_shape, int s, const T* in, T* out) {
  const int c_out = in_shape.c / (s * s);
  const int h = in_shape.h, w = in_shape.w;
  const int ho = h * s, wo = w * s;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < in_shape.n; ++n)
    for (int c = 0; c < c_out; ++c)
      for (int k = 0; k < s * s; ++k) {
        const int dy = k / s, dx = k % s;
        const T* src = in + (static_cast<std::size_t>(n) * in_shape.c + c * s * s + k) * h * w;
        T* dst = out + (static_cast<std::size_t>(n) * c_out + c) * ho * wo;
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            dst[static_cast<std::size_t>(s * y + dy) * wo + s * x + dx] = src[y * w + x];
      }
}

template <typename T>
void pixel_unshuffle(const Shape& out_shape, int s, const T* out, T* in) {
  const int c_out = out_shape.c / (s * s);
  const int h = out_shape.h, w = out_shape.w;
  const int ho = h * s, wo = w * s;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < out_shape.n; ++n)
    for (int c = 0; c < c_out; ++c)
      for (int k = 0; k < s * s; ++k) {
        const int dy = k / s, dx = k % s;
        T* dst = in + (static_cast<std::size_t>(n) * out_shape.c + c * s * s + k) * h * w;
        const T* src = out + (static_cast<std::size_t>(n) * c_out + c) * ho * wo;
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            dst[y * w + x] = src[static_cast<std::size_t>(s * y + dy) * wo + s * x + dx];
      }
}

#define JSI_INSTANTIATE(T)                                                        \
  template void box_filter_forward<T>(int, int, int, int, const T*, T*);          \
  template void box_filter_backward<T>(int, int, int, int, const T*, T*);         \
  template void pixel_shuffle<T>(const Shape&, int, const T*, T*);                \
  template void pixel_unshuffle<T>(const Shape&, int, const T*, T*);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi::kernels
