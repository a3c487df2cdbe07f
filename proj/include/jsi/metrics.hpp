#pragma once

#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "jsi/tensor.hpp"

namespace jsi {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// 10 log10(peak^2 / MSE) over all elements after clamping both inputs to
/// [0, 1]. Identical inputs give +infinity.
double psnr(const Tensor<double>& ref, const Tensor<double>& pred, double peak = 1.0);

/// Single-scale SSIM (11x11 Gaussian window, sigma 1.5, data range 1,
/// replicate borders), averaged over channels and batch items. Inputs are
/// clamped to [0, 1].
double ssim(const Tensor<double>& ref, const Tensor<double>& pred);

/// JSON value for a PSNR: a number, or null for the infinite sentinel.
nlohmann::json psnr_json(double db);

struct MetricReport {
  std::vector<double> psnr_db;  // one per image
  std::vector<double> ssim;
  double mean_psnr = 0.0;       // +infinity if every image is identical
  double mean_ssim = 0.0;

  void add(double psnr_value, double ssim_value);
  nlohmann::json to_json() const;
  std::string table() const;
};

/// Per-image PSNR/SSIM of aligned [n, c, h, w] batches.
MetricReport evaluate_batch(const Tensor<double>& ref, const Tensor<double>& pred);

}  // namespace jsi
