#pragma once

// Raw NCHW loops behind the differentiable ops.
//
// Every kernel in jsi::kernels has a serial counterpart in
// jsi::kernels::reference with the same signature. The reference versions are
// direct transcriptions of the defining sums and exist for tests and the
// benchmark; the top-level versions are the OpenMP / GEMM fast paths used at
// runtime. Backward kernels accumulate into their outputs; a null output
// pointer skips that gradient.

#include "jsi/tensor.hpp"

namespace jsi::kernels {

struct ConvGeometry {
  int n = 0, c_in = 0, h = 0, w = 0;
  int c_out = 0, k = 0, stride = 1, pad = 0;

  int h_out() const { return (h + 2 * pad - k) / stride + 1; }
  int w_out() const { return (w + 2 * pad - k) / stride + 1; }
};

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* weight,
                    const T* bias, T* y);
template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* x, const T* weight,
                     const T* gy, T* gx, T* gweight, T* gbias);

/// y[n, out] = W[out, in] x[n, in] + b[out]
template <typename T>
void linear_forward(int n, int in, int out, const T* x, const T* weight,
                    const T* bias, T* y);
template <typename T>
void linear_backward(int n, int in, int out, const T* x, const T* weight,
                     const T* gy, T* gx, T* gweight, T* gbias);

/// Mean over the (2r+1)^2 window with clamp-to-edge indexing, per plane.
template <typename T>
void box_filter_forward(int planes, int h, int w, int radius, const T* x, T* y);
/// Adjoint of box_filter_forward.
template <typename T>
void box_filter_backward(int planes, int h, int w, int radius, const T* gy, T* gx);

/// out(n, c, s*y + k/s, s*x + k%s) = in(n, c*s*s + k, y, x). Both directions
/// take the packed (n, c*s*s, h, w) shape.
template <typename T>
void pixel_shuffle(const Shape& packed, int s, const T* in, T* out);
template <typename T>
void pixel_unshuffle(const Shape& packed, int s, const T* out, T* in);

// Dynamic up-sampling filters. `x_shape` is the (n, c, h, w) image; filter
// fields are (n, taps * s*s, h, w) and outputs (n, c, s*h, s*w).
inline constexpr int kSeparableTaps = 41;
inline constexpr int kLocalKernel = 9;

/// `mid` receives the vertically filtered planes, laid out (n, c, s*s, h, w).
template <typename T>
void dynamic_separable_forward(const Shape& x_shape, int s, const T* x,
                               const T* vertical, const T* horizontal, T* mid,
                               T* y);
template <typename T>
void dynamic_separable_backward(const Shape& x_shape, int s, const T* x,
                                const T* vertical, const T* horizontal,
                                const T* mid, const T* gy, T* gx, T* gvertical,
                                T* ghorizontal);
template <typename T>
void dynamic_2d_forward(const Shape& x_shape, int s, const T* x, const T* coeffs,
                        T* y);
template <typename T>
void dynamic_2d_backward(const Shape& x_shape, int s, const T* x,
                         const T* coeffs, const T* gy, T* gx, T* gcoeffs);

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* weight,
                    const T* bias, T* y);
template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* x, const T* weight,
                     const T* gy, T* gx, T* gweight, T* gbias);
template <typename T>
void box_filter_forward(int planes, int h, int w, int radius, const T* x, T* y);
template <typename T>
void box_filter_backward(int planes, int h, int w, int radius, const T* gy, T* gx);
template <typename T>
void dynamic_separable_forward(const Shape& x_shape, int s, const T* x,
                               const T* vertical, const T* horizontal, T* mid,
                               T* y);
template <typename T>
void dynamic_separable_backward(const Shape& x_shape, int s, const T* x,
                                const T* vertical, const T* horizontal,
                                const T* mid, const T* gy, T* gx, T* gvertical,
                                T* ghorizontal);
template <typename T>
void dynamic_2d_forward(const Shape& x_shape, int s, const T* x, const T* coeffs,
                        T* y);
template <typename T>
void dynamic_2d_backward(const Shape& x_shape, int s, const T* x,
                         const T* coeffs, const T* gy, T* gx, T* gcoeffs);

}  // namespace reference

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace jsi::kernels
