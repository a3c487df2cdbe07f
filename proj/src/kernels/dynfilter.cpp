#include <algorithm>
#include <vector>

#include "jsi/kernels.hpp"

namespace jsi::kernels {
namespace {
constexpr int kHalfTaps = kSeparableTaps / 2;
constexpr int kHalfKernel = kLocalKernel / 2;
constexpr int kLocalTaps = kLocalKernel * kLocalKernel;
}  // namespace

// Work is split over (batch, sub-position): every (n, p) task owns its slice
// of the intermediate, its output pixels, and its filter-gradient channels.
// Input gradients sum over p and are gathered in a second (n, c) sweep.

template <typename T>
void dynamic_separable_forward(const Shape& xs, int s, const T* x,
                               const T* vertical, const T* horizontal, T* mid,
                               T* y) {
  const int h = xs.h, w = xs.w, ss = s * s;
  const std::size_t hw = xs.plane();
  const int wo = w * s;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n)
    for (int p = 0; p < ss; ++p) {
      const T* fv = vertical + (static_cast<std::size_t>(n) * kSeparableTaps * ss + kSeparableTaps * p) * hw;
      const T* fh = horizontal + (static_cast<std::size_t>(n) * kSeparableTaps * ss + kSeparableTaps * p) * hw;
      const int dy = p / s, dx = p % s;
      std::vector<T> acc(w);
      for (int c = 0; c < xs.c; ++c) {
        const T* plane = x + (static_cast<std::size_t>(n) * xs.c + c) * hw;
        T* m = mid + ((static_cast<std::size_t>(n) * xs.c + c) * ss + p) * hw;
        for (int yy = 0; yy < h; ++yy) {
          std::fill(acc.begin(), acc.end(), T(0));
          for (int k = 0; k < kSeparableTaps; ++k) {
            const T* row = plane + static_cast<std::size_t>(clamp_index(yy + k - kHalfTaps, h)) * w;
            const T* f = fv + k * hw + static_cast<std::size_t>(yy) * w;
            for (int xx = 0; xx < w; ++xx) acc[xx] += row[xx] * f[xx];
          }
          std::copy(acc.begin(), acc.end(), m + static_cast<std::size_t>(yy) * w);
        }
        T* out = y + (static_cast<std::size_t>(n) * xs.c + c) * hw * ss;
        for (int yy = 0; yy < h; ++yy) {
          std::fill(acc.begin(), acc.end(), T(0));
          const T* row = m + static_cast<std::size_t>(yy) * w;
          for (int k = 0; k < kSeparableTaps; ++k) {
            const T* f = fh + k * hw + static_cast<std::size_t>(yy) * w;
            for (int xx = 0; xx < w; ++xx)
              acc[xx] += row[clamp_index(xx + k - kHalfTaps, w)] * f[xx];
          }
          T* orow = out + static_cast<std::size_t>(s * yy + dy) * wo + dx;
          for (int xx = 0; xx < w; ++xx) orow[static_cast<std::size_t>(s) * xx] = acc[xx];
        }
      }
    }
}

template <typename T>
void dynamic_separable_backward(const Shape& xs, int s, const T* x,
                                const T* vertical, const T* horizontal,
                                const T* mid, const T* gy, T* gx, T* gvertical,
                                T* ghorizontal) {
  const int h = xs.h, w = xs.w, ss = s * s;
  const std::size_t hw = xs.plane();
  const int wo = w * s;
  const bool need_mid_grad = gx || gvertical;
  std::vector<T> gmid(need_mid_grad ? static_cast<std::size_t>(xs.n) * xs.c * ss * hw : 0);

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n)
    for (int p = 0; p < ss; ++p) {
      const std::size_t fbase = (static_cast<std::size_t>(n) * kSeparableTaps * ss + kSeparableTaps * p) * hw;
      const T* fh = horizontal + fbase;
      const int dy = p / s, dx = p % s;
      std::vector<T> gu(hw);
      for (int c = 0; c < xs.c; ++c) {
        const T* out_grad = gy + (static_cast<std::size_t>(n) * xs.c + c) * hw * ss;
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < w; ++xx)
            gu[static_cast<std::size_t>(yy) * w + xx] =
                out_grad[static_cast<std::size_t>(s * yy + dy) * wo + s * xx + dx];
        const std::size_t mbase = ((static_cast<std::size_t>(n) * xs.c + c) * ss + p) * hw;
        const T* m = mid + mbase;
        if (ghorizontal) {
          for (int k = 0; k < kSeparableTaps; ++k) {
            T* g = ghorizontal + fbase + k * hw;
            for (int yy = 0; yy < h; ++yy) {
              const T* row = m + static_cast<std::size_t>(yy) * w;
              const T* gr = gu.data() + static_cast<std::size_t>(yy) * w;
              T* grow = g + static_cast<std::size_t>(yy) * w;
              for (int xx = 0; xx < w; ++xx)
                grow[xx] += gr[xx] * row[clamp_index(xx + k - kHalfTaps, w)];
            }
          }
        }
        if (need_mid_grad) {
          T* gm = gmid.data() + mbase;
          for (int yy = 0; yy < h; ++yy) {
            const T* gr = gu.data() + static_cast<std::size_t>(yy) * w;
            T* gmrow = gm + static_cast<std::size_t>(yy) * w;
            for (int k = 0; k < kSeparableTaps; ++k) {
              const T* f = fh + k * hw + static_cast<std::size_t>(yy) * w;
              for (int xx = 0; xx < w; ++xx)
                gmrow[clamp_index(xx + k - kHalfTaps, w)] += gr[xx] * f[xx];
            }
          }
          if (gvertical) {
            const T* plane = x + (static_cast<std::size_t>(n) * xs.c + c) * hw;
            for (int k = 0; k < kSeparableTaps; ++k) {
              T* g = gvertical + fbase + k * hw;
              for (int yy = 0; yy < h; ++yy) {
                const T* row = plane + static_cast<std::size_t>(clamp_index(yy + k - kHalfTaps, h)) * w;
                const T* gmrow = gm + static_cast<std::size_t>(yy) * w;
                T* grow = g + static_cast<std::size_t>(yy) * w;
                for (int xx = 0; xx < w; ++xx) grow[xx] += gmrow[xx] * row[xx];
              }
            }
          }
        }
      }
    }

  if (!gx) return;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      T* g = gx + (static_cast<std::size_t>(n) * xs.c + c) * hw;
      for (int p = 0; p < ss; ++p) {
        const T* fv = vertical + (static_cast<std::size_t>(n) * kSeparableTaps * ss + kSeparableTaps * p) * hw;
        const T* gm = gmid.data() + ((static_cast<std::size_t>(n) * xs.c + c) * ss + p) * hw;
        for (int yy = 0; yy < h; ++yy)
          for (int k = 0; k < kSeparableTaps; ++k) {
            T* grow = g + static_cast<std::size_t>(clamp_index(yy + k - kHalfTaps, h)) * w;
            const T* f = fv + k * hw + static_cast<std::size_t>(yy) * w;
            const T* gmrow = gm + static_cast<std::size_t>(yy) * w;
            for (int xx = 0; xx < w; ++xx) grow[xx] += gmrow[xx] * f[xx];
          }
      }
    }
}

template <typename T>
void dynamic_2d_forward(const Shape& xs, int s, const T* x, const T* coeffs, T* y) {
  const int h = xs.h, w = xs.w, ss = s * s;
  const std::size_t hw = xs.plane();
  const int wo = w * s;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n)
    for (int p = 0; p < ss; ++p) {
      const T* f = coeffs + (static_cast<std::size_t>(n) * kLocalTaps * ss + kLocalTaps * p) * hw;
      const int dy = p / s, dx = p % s;
      std::vector<T> acc(w);
      for (int c = 0; c < xs.c; ++c) {
        const T* plane = x + (static_cast<std::size_t>(n) * xs.c + c) * hw;
        T* out = y + (static_cast<std::size_t>(n) * xs.c + c) * hw * ss;
        for (int yy = 0; yy < h; ++yy) {
          std::fill(acc.begin(), acc.end(), T(0));
          for (int i = 0; i < kLocalKernel; ++i) {
            const T* row = plane + static_cast<std::size_t>(clamp_index(yy + i - kHalfKernel, h)) * w;
            for (int j = 0; j < kLocalKernel; ++j) {
              const T* fk = f + static_cast<std::size_t>(i * kLocalKernel + j) * hw + static_cast<std::size_t>(yy) * w;
              for (int xx = 0; xx < w; ++xx)
                acc[xx] += row[clamp_index(xx + j - kHalfKernel, w)] * fk[xx];
            }
          }
          T* orow = out + static_cast<std::size_t>(s * yy + dy) * wo + dx;
          for (int xx = 0; xx < w; ++xx) orow[static_cast<std::size_t>(s) * xx] = acc[xx];
        }
      }
    }
}

template <typename T>
void dynamic_2d_backward(const Shape& xs, int s, const T* x, const T* coeffs,
                         const T* gy, T* gx, T* gcoeffs) {
  const int h = xs.h, w = xs.w, ss = s * s;
  const std::size_t hw = xs.plane();
  const int wo = w * s;
  auto grad_at = [&](int n, int c, int p, int yy, int xx) {
    return gy[(static_cast<std::size_t>(n) * xs.c + c) * hw * ss +
              static_cast<std::size_t>(s * yy + p / s) * wo + s * xx + p % s];
  };
  if (gcoeffs) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < xs.n; ++n)
      for (int p = 0; p < ss; ++p) {
        T* g = gcoeffs + (static_cast<std::size_t>(n) * kLocalTaps * ss + kLocalTaps * p) * hw;
        std::vector<T> gv(w);
        for (int c = 0; c < xs.c; ++c) {
          const T* plane = x + (static_cast<std::size_t>(n) * xs.c + c) * hw;
          for (int yy = 0; yy < h; ++yy) {
            for (int xx = 0; xx < w; ++xx) gv[xx] = grad_at(n, c, p, yy, xx);
            for (int i = 0; i < kLocalKernel; ++i) {
              const T* row = plane + static_cast<std::size_t>(clamp_index(yy + i - kHalfKernel, h)) * w;
              for (int j = 0; j < kLocalKernel; ++j) {
                T* gk = g + static_cast<std::size_t>(i * kLocalKernel + j) * hw + static_cast<std::size_t>(yy) * w;
                for (int xx = 0; xx < w; ++xx)
                  gk[xx] += gv[xx] * row[clamp_index(xx + j - kHalfKernel, w)];
              }
            }
          }
        }
      }
  }
  if (gx) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        T* g = gx + (static_cast<std::size_t>(n) * xs.c + c) * hw;
        std::vector<T> gv(w);
        for (int p = 0; p < ss; ++p) {
          const T* f = coeffs + (static_cast<std::size_t>(n) * kLocalTaps * ss + kLocalTaps * p) * hw;
          for (int yy = 0; yy < h; ++yy) {
            for (int xx = 0; xx < w; ++xx) gv[xx] = grad_at(n, c, p, yy, xx);
            for (int i = 0; i < kLocalKernel; ++i) {
              T* grow = g + static_cast<std::size_t>(clamp_index(yy + i - kHalfKernel, h)) * w;
              for (int j = 0; j < kLocalKernel; ++j) {
                const T* fk = f + static_cast<std::size_t>(i * kLocalKernel + j) * hw + static_cast<std::size_t>(yy) * w;
                for (int xx = 0; xx < w; ++xx)
                  grow[clamp_index(xx + j - kHalfKernel, w)] += gv[xx] * fk[xx];
              }
            }
          }
        }
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

}  // namespace jsi::kernels
