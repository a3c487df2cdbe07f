#include "jsi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace jsi {
namespace {

std::vector<double> gaussian_window() {
  std::vector<double> k(kSsimWindow);
  const int half = kSsimWindow / 2;
  double total = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    total += k[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
  }
  for (auto& v : k) v /= total;
  return k;
}

// Separable Gaussian weighting with replicate borders, one plane.
std::vector<double> blur(const std::vector<double>& p, int h, int w, const std::vector<double>& k) {
  const int half = kSsimWindow / 2;
  std::vector<double> tmp(p.size()), out(p.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = 0; i < kSsimWindow; ++i)
        acc += k[i] * p[y * w + std::clamp(x + i - half, 0, w - 1)];
      tmp[y * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = 0; i < kSsimWindow; ++i)
        acc += k[i] * tmp[std::clamp(y + i - half, 0, h - 1) * w + x];
      out[y * w + x] = acc;
    }
  return out;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double ssim_plane(const double* a, const double* b, int h, int w, const std::vector<double>& k) {
  const std::size_t size = static_cast<std::size_t>(h) * w;
  std::vector<double> x(size), y(size), xx(size), yy(size), xy(size);
  for (std::size_t i = 0; i < size; ++i) {
    x[i] = clamp01(a[i]);
    y[i] = clamp01(b[i]);
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = blur(x, h, w, k), my = blur(y, h, w, k);
  const auto sxx = blur(xx, h, w, k), syy = blur(yy, h, w, k), sxy = blur(xy, h, w, k);
  const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;
  double total = 0;
  for (std::size_t i = 0; i < size; ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(size);
}

}  // namespace

double psnr(const Tensor<double>& ref, const Tensor<double>& pred, double peak) {
  require_same_shape(ref.shape(), pred.shape(), "psnr");
  if (ref.empty()) throw std::invalid_argument("psnr: empty images");
  double acc = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = clamp01(ref[i]) - clamp01(pred[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor<double>& ref, const Tensor<double>& pred) {
  require_same_shape(ref.shape(), pred.shape(), "ssim");
  const Shape s = ref.shape();
  if (s.h < kSsimWindow || s.w < kSsimWindow)
    throw std::invalid_argument("ssim: image " + s.str() + " smaller than the 11x11 window");
  const auto k = gaussian_window();
  double total = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) total += ssim_plane(ref.plane(n, c), pred.plane(n, c), s.h, s.w, k);
  return total / (static_cast<double>(s.n) * s.c);
}

nlohmann::json psnr_json(double db) {
  if (std::isinf(db)) return nullptr;
  return db;
}

void MetricReport::add(double p, double s) {
  psnr_db.push_back(p);
  ssim.push_back(s);
  double sp = 0, ss = 0;
  for (double v : psnr_db) sp += v;
  for (double v : ssim) ss += v;
  mean_psnr = sp / static_cast<double>(psnr_db.size());
  mean_ssim = ss / static_cast<double>(ssim.size());
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json images = nlohmann::json::array();
  for (std::size_t i = 0; i < psnr_db.size(); ++i)
    images.push_back({{"index", i},
                      {"psnr_db", psnr_json(psnr_db[i])},
                      {"psnr_infinite", std::isinf(psnr_db[i])},
                      {"ssim", ssim[i]}});
  return {{"images", images},
          {"mean", {{"psnr_db", psnr_json(mean_psnr)},
                    {"psnr_infinite", std::isinf(mean_psnr)},
                    {"ssim", mean_ssim}}}};
}

std::string MetricReport::table() const {
  std::ostringstream out;
  char line[96];
  auto fmt = [](double db) {
    char buf[32];
    if (std::isinf(db)) return std::string("inf");
    std::snprintf(buf, sizeof buf, "%.4f", db);
    return std::string(buf);
  };
  std::snprintf(line, sizeof line, "%-8s %12s %10s\n", "image", "PSNR (dB)", "SSIM");
  out << line;
  for (std::size_t i = 0; i < psnr_db.size(); ++i) {
    std::snprintf(line, sizeof line, "%-8zu %12s %10.6f\n", i, fmt(psnr_db[i]).c_str(), ssim[i]);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-8s %12s %10.6f\n", "mean", fmt(mean_psnr).c_str(), mean_ssim);
  out << line;
  return out.str();
}

MetricReport evaluate_batch(const Tensor<double>& ref, const Tensor<double>& pred) {
  require_same_shape(ref.shape(), pred.shape(), "evaluate_batch");
  const Shape s = ref.shape();
  const Shape one{1, s.c, s.h, s.w};
  const std::size_t block = one.numel();
  MetricReport report;
  for (int n = 0; n < s.n; ++n) {
    Tensor<double> a(one), b(one);
    std::copy_n(ref.data() + n * block, block, a.data());
    std::copy_n(pred.data() + n * block, block, b.data());
    report.add(psnr(a, b), ssim(a, b));
  }
  return report;
}

}  // namespace jsi
