#include <vector>

#include "jsi/kernels.hpp"

namespace jsi::kernels::reference {
namespace {
constexpr int kHalfTaps = kSeparableTaps / 2;
constexpr int kHalfKernel = kLocalKernel / 2;
constexpr int kLocalTaps = kLocalKernel * kLocalKernel;

struct Index {
  Shape xs;
  int s;
  std::size_t img(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * xs.c + c) * xs.h + y) * xs.w + x;
  }
  std::size_t field(int taps, int n, int ch, int y, int x) const {
    return ((static_cast<std::size_t>(n) * taps * s * s + ch) * xs.h + y) * xs.w + x;
  }
  std::size_t mid(int n, int c, int p, int y, int x) const {
    return (((static_cast<std::size_t>(n) * xs.c + c) * s * s + p) * xs.h + y) * xs.w + x;
  }
  std::size_t out(int n, int c, int p, int y, int x) const {
    const int oy = s * y + p / s, ox = s * x + p % s;
    return ((static_cast<std::size_t>(n) * xs.c + c) * xs.h * s + oy) * xs.w * s + ox;
  }
};

}  // namespace

template <typename T>
void dynamic_separable_forward(const Shape& xs, int s, const T* x,
                               const T* vertical, const T* horizontal, T* mid,
                               T* y) {
  const Index ix{xs, s};
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int p = 0; p < s * s; ++p)
        for (int yy = 0; yy < xs.h; ++yy)
          for (int xx = 0; xx < xs.w; ++xx) {
            T acc = 0;
            for (int k = 0; k < kSeparableTaps; ++k)
              acc += x[ix.img(n, c, clamp_index(yy + k - kHalfTaps, xs.h), xx)] *
                     vertical[ix.field(kSeparableTaps, n, kSeparableTaps * p + k, yy, xx)];
            mid[ix.mid(n, c, p, yy, xx)] = acc;
          }
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int p = 0; p < s * s; ++p)
        for (int yy = 0; yy < xs.h; ++yy)
          for (int xx = 0; xx < xs.w; ++xx) {
            T acc = 0;
            for (int k = 0; k < kSeparableTaps; ++k)
              acc += mid[ix.mid(n, c, p, yy, clamp_index(xx + k - kHalfTaps, xs.w))] *
                     horizontal[ix.field(kSeparableTaps, n, kSeparableTaps * p + k, yy, xx)];
            y[ix.out(n, c, p, yy, xx)] = acc;
          }
}

template <typename T>
void dynamic_separable_backward(const Shape& xs, int s, const T* x,
                                const T* vertical, const T* horizontal,
                                const T* mid, const T* gy, T* gx, T* gvertical,
                                T* ghorizontal) {
  const Index ix{xs, s};
  std::vector<T> gmid(static_cast<std::size_t>(xs.n) * xs.c * s * s * xs.h * xs.w, T(0));
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int p = 0; p < s * s; ++p)
        for (int yy = 0; yy < xs.h; ++yy)
          for (int xx = 0; xx < xs.w; ++xx) {
            const T g = gy[ix.out(n, c, p, yy, xx)];
            for (int k = 0; k < kSeparableTaps; ++k) {
              const std::size_t mi = ix.mid(n, c, p, yy, clamp_index(xx + k - kHalfTaps, xs.w));
              const std::size_t fi = ix.field(kSeparableTaps, n, kSeparableTaps * p + k, yy, xx);
              if (ghorizontal) ghorizontal[fi] += g * mid[mi];
              gmid[mi] += g * horizontal[fi];
            }
          }
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int p = 0; p < s * s; ++p)
        for (int yy = 0; yy < xs.h; ++yy)
          for (int xx = 0; xx < xs.w; ++xx) {
            const T g = gmid[ix.mid(n, c, p, yy, xx)];
            for (int k = 0; k < kSeparableTaps; ++k) {
              const std::size_t xi = ix.img(n, c, clamp_index(yy + k - kHalfTaps, xs.h), xx);
              const std::size_t fi = ix.field(kSeparableTaps, n, kSeparableTaps * p + k, yy, xx);
              if (gvertical) gvertical[fi] += g * x[xi];
              if (gx) gx[xi] += g * vertical[fi];
            }
          }
}

template <typename T>
void dynamic_2d_forward(const Shape& xs, int s, const T* x, const T* coeffs, T* y) {
  const Index ix{xs, s};
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int p = 0; p < s * s; ++p)
        for (int yy = 0; yy < xs.h; ++yy)
          for (int xx = 0; xx < xs.w; ++xx) {
            T acc = 0;
            for (int i = 0; i < kLocalKernel; ++i)
              for (int j = 0; j < kLocalKernel; ++j)
                acc += x[ix.img(n, c, clamp_index(yy + i - kHalfKernel, xs.h),
                                clamp_index(xx + j - kHalfKernel, xs.w))] *
                       coeffs[ix.field(kLocalTaps, n, kLocalTaps * p + kLocalKernel * i + j, yy, xx)];
            y[ix.out(n, c, p, yy, xx)] = acc;
          }
}

template <typename T>
void dynamic_2d_backward(const Shape& xs, int s, const T* x, const T* coeffs,
                         const T* gy, T* gx, T* gcoeffs) {
  const Index ix{xs, s};
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int p = 0; p < s * s; ++p)
        for (int yy = 0; yy < xs.h; ++yy)
          for (int xx = 0; xx < xs.w; ++xx) {
            const T g = gy[ix.out(n, c, p, yy, xx)];
            for (int i = 0; i < kLocalKernel; ++i)
              for (int j = 0; j < kLocalKernel; ++j) {
                const std::size_t xi = ix.img(n, c, clamp_index(yy + i - kHalfKernel, xs.h),
                                              clamp_index(xx + j - kHalfKernel, xs.w));
                const std::size_t fi =
                    ix.field(kLocalTaps, n, kLocalTaps * p + kLocalKernel * i + j, yy, xx);
                if (gcoeffs) gcoeffs[fi] += g * x[xi];
                if (gx) gx[xi] += g * coeffs[fi];
              }
          }
}

#define JSI_INSTANTIATE(T)                                                            \
  template void dynamic_separable_forward<T>(const Shape&, int, const T*, const T*,   \
                                             const T*, T*, T*);                       \
  template void dynamic_separable_backward<T>(const Shape&, int, const T*, const T*,  \
                                              const T*, const T*, const T*, T*, T*,   \
                                              T*);                                    \
  template void dynamic_2d_forward<T>(const Shape&, int, const T*, const T*, T*);     \
  template void dynamic_2d_backward<T>(const Shape&, int, const T*, const T*,         \
                                       const T*, T*, T*);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi::kernels::reference
