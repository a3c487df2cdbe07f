#pragma once
// Naive test-side references. Nothing here calls into the library beyond
// Tensor storage, so agreement with the library is an independent check.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "jsi/tensor.hpp"

namespace oracle {

using jsi::Shape;
using jsi::Tensor;

inline int clampi(int i, int n) { return std::max(0, std::min(n - 1, i)); }

// Cross-correlation with zero padding.
inline Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& w,
                             const Tensor<double>& b, int stride, int pad) {
  const Shape xs = x.shape(), ws = w.shape();
  const int ho = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int wo = (xs.w + 2 * pad - ws.w) / stride + 1;
  Tensor<double> y(Shape{xs.n, ws.n, ho, wo});
  for (int n = 0; n < xs.n; ++n)
    for (int o = 0; o < ws.n; ++o)
      for (int i = 0; i < ho; ++i)
        for (int j = 0; j < wo; ++j) {
          double acc = b.empty() ? 0.0 : b[o];
          for (int c = 0; c < xs.c; ++c)
            for (int ki = 0; ki < ws.h; ++ki)
              for (int kj = 0; kj < ws.w; ++kj) {
                const int yy = i * stride + ki - pad, xx = j * stride + kj - pad;
                if (yy < 0 || yy >= xs.h || xx < 0 || xx >= xs.w) continue;
                acc += x.at(n, c, yy, xx) * w.at(o, c, ki, kj);
              }
          y.at(n, o, i, j) = acc;
        }
  return y;
}

// Sub-position p of pixel (y, x) lands at (s*y + p/s, s*x + p%s).
inline Tensor<double> dynamic_separable(const Tensor<double>& x, const Tensor<double>& fv,
                                        const Tensor<double>& fh, int s) {
  const Shape xs = x.shape();
  const int taps = 41, half = 20;
  Tensor<double> out(Shape{xs.n, xs.c, s * xs.h, s * xs.w});
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int p = 0; p < s * s; ++p)
        for (int y = 0; y < xs.h; ++y)
          for (int x0 = 0; x0 < xs.w; ++x0) {
            double u = 0;
            for (int kh = 0; kh < taps; ++kh) {
              const int xc = clampi(x0 + kh - half, xs.w);
              // t at (y, xc) uses the filters predicted at (y, xc).
              double t = 0;
              for (int kv = 0; kv < taps; ++kv)
                t += x.at(n, c, clampi(y + kv - half, xs.h), xc) * fv.at(n, taps * p + kv, y, xc);
              u += t * fh.at(n, taps * p + kh, y, x0);
            }
            out.at(n, c, s * y + p / s, s * x0 + p % s) = u;
          }
  return out;
}

// s = 1 separable filtering written as one 41x41 kernel per pixel. The
// vertical taps come from the column the horizontal tap lands on, so the
// effective kernel is K[kv][kh] = fv(y, x+kh-20)[kv] * fh(y, x)[kh].
inline Tensor<double> outer_product_41(const Tensor<double>& x, const Tensor<double>& fv,
                                       const Tensor<double>& fh) {
  const Shape xs = x.shape();
  const int taps = 41, half = 20;
  Tensor<double> out(xs);
  std::vector<double> kernel(taps * taps);
  for (int n = 0; n < xs.n; ++n)
    for (int y = 0; y < xs.h; ++y)
      for (int x0 = 0; x0 < xs.w; ++x0) {
        for (int kv = 0; kv < taps; ++kv)
          for (int kh = 0; kh < taps; ++kh)
            kernel[kv * taps + kh] =
                fv.at(n, kv, y, clampi(x0 + kh - half, xs.w)) * fh.at(n, kh, y, x0);
        for (int c = 0; c < xs.c; ++c) {
          double acc = 0;
          for (int kv = 0; kv < taps; ++kv)
            for (int kh = 0; kh < taps; ++kh)
              acc += kernel[kv * taps + kh] *
                     x.at(n, c, clampi(y + kv - half, xs.h), clampi(x0 + kh - half, xs.w));
          out.at(n, c, y, x0) = acc;
        }
      }
  return out;
}

// Literal per-pixel outer product K = v h^T taken from pixel (y, x) alone.
inline Tensor<double> pixel_outer_product_41(const Tensor<double>& x, const Tensor<double>& fv,
                                             const Tensor<double>& fh) {
  const Shape xs = x.shape();
  Tensor<double> out(xs);
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int y = 0; y < xs.h; ++y)
        for (int x0 = 0; x0 < xs.w; ++x0) {
          double acc = 0;
          for (int kv = 0; kv < 41; ++kv)
            for (int kh = 0; kh < 41; ++kh)
              acc += fv.at(n, kv, y, x0) * fh.at(n, kh, y, x0) *
                     x.at(n, c, clampi(y + kv - 20, xs.h), clampi(x0 + kh - 20, xs.w));
          out.at(n, c, y, x0) = acc;
        }
  return out;
}

inline Tensor<double> dynamic_2d(const Tensor<double>& x, const Tensor<double>& f, int s) {
  const Shape xs = x.shape();
  Tensor<double> out(Shape{xs.n, xs.c, s * xs.h, s * xs.w});
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int p = 0; p < s * s; ++p)
        for (int y = 0; y < xs.h; ++y)
          for (int x0 = 0; x0 < xs.w; ++x0) {
            double v = 0;
            for (int i = 0; i < 9; ++i)
              for (int j = 0; j < 9; ++j)
                v += x.at(n, c, clampi(y + i - 4, xs.h), clampi(x0 + j - 4, xs.w)) *
                     f.at(n, 81 * p + 9 * i + j, y, x0);
            out.at(n, c, s * y + p / s, s * x0 + p % s) = v;
          }
  return out;
}

// Window mean with clamped coordinates, evaluated per pixel.
inline double window_mean(const std::vector<double>& p, int h, int w, int y, int x, int r) {
  double acc = 0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) acc += p[clampi(y + dy, h) * w + clampi(x + dx, w)];
  return acc / ((2.0 * r + 1) * (2.0 * r + 1));
}

inline Tensor<double> guided_filter(const Tensor<double>& img, int r, double eps) {
  const Shape s = img.shape();
  Tensor<double> out(s);
  const int h = s.h, w = s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      std::vector<double> p(img.plane(n, c), img.plane(n, c) + h * w), sq(h * w);
      for (int i = 0; i < h * w; ++i) sq[i] = p[i] * p[i];
      std::vector<double> a(h * w), b(h * w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double mu = window_mean(p, h, w, y, x, r);
          const double var = std::max(0.0, window_mean(sq, h, w, y, x, r) - mu * mu);
          a[y * w + x] = var / (var + eps);
          b[y * w + x] = (1.0 - a[y * w + x]) * mu;
        }
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out.at(n, c, y, x) =
              window_mean(a, h, w, y, x, r) * p[y * w + x] + window_mean(b, h, w, y, x, r);
    }
  return out;
}

inline double psnr(const Tensor<double>& a, const Tensor<double>& b) {
  // First pass: clamp; second pass: squared error.
  std::vector<double> ca(a.size()), cb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[i] = std::min(1.0, std::max(0.0, a[i]));
    cb[i] = std::min(1.0, std::max(0.0, b[i]));
  }
  long double se = 0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (ca[i] - cb[i]) * (ca[i] - cb[i]);
  const double mse = static_cast<double>(se / a.size());
  return -10.0 * std::log10(mse);
}

// Direct 11x11 window per pixel with a normalized 2-D Gaussian.
inline double ssim(const Tensor<double>& a, const Tensor<double>& b) {
  const Shape s = a.shape();
  double g[11], gs = 0;
  for (int i = 0; i < 11; ++i) gs += g[i] = std::exp(-(i - 5.0) * (i - 5.0) / (2 * 1.5 * 1.5));
  double total = 0;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      double plane = 0;
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
          for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
              const double wgt = g[i] * g[j] / (gs * gs);
              const int yy = clampi(y + i - 5, s.h), xx = clampi(x + j - 5, s.w);
              const double u = std::min(1.0, std::max(0.0, a.at(n, c, yy, xx)));
              const double v = std::min(1.0, std::max(0.0, b.at(n, c, yy, xx)));
              mx += wgt * u;
              my += wgt * v;
              sxx += wgt * u * u;
              syy += wgt * v * v;
              sxy += wgt * u * v;
            }
          const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
          plane += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
      total += plane / (s.h * s.w);
    }
  return total / (s.n * s.c);
}

// SSIM of two constant images: only the luminance term differs from 1.
inline double ssim_constant(double u, double v) {
  const double c1 = 0.01 * 0.01;
  return (2 * u * v + c1) / (u * u + v * v + c1);
}

inline double feature_matching(const std::vector<Tensor<double>>& real,
                               const std::vector<Tensor<double>>& fake) {
  double total = 0;
  for (std::size_t t = 0; t < real.size(); ++t) {
    double acc = 0;
    for (std::size_t i = 0; i < real[t].size(); ++i)
      acc += (real[t][i] - fake[t][i]) * (real[t][i] - fake[t][i]);
    total += acc / static_cast<double>(real[t].size());
  }
  return total;
}

// Singular values, descending, of a weight viewed as (out x rest).
inline Eigen::VectorXd singular_values(const Tensor<double>& w) {
  const Shape s = w.shape();
  const int rows = s.n, cols = s.c * s.h * s.w;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = w[static_cast<std::size_t>(r) * cols + c];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();
}

inline double leading_singular_value(const Tensor<double>& w) { return singular_values(w)(0); }

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
