#include "jsi/color.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace jsi {
namespace {

constexpr double kM1 = 2610.0 / 16384.0;
constexpr double kM2 = 2523.0 / 4096.0 * 128.0;
constexpr double kC1 = 3424.0 / 4096.0;
constexpr double kC2 = 2413.0 / 4096.0 * 32.0;
constexpr double kC3 = 2392.0 / 4096.0 * 32.0;

std::atomic<std::uint64_t> g_pq_clamps{0};

double clamp_counted(double v) {
  if (v < 0.0 || v > 1.0 || std::isnan(v)) {
    g_pq_clamps.fetch_add(1, std::memory_order_relaxed);
    return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  }
  return v;
}

struct LumaCoeffs {
  double kr, kb;
};

LumaCoeffs coeffs(YuvMatrix m) {
  switch (m) {
    case YuvMatrix::bt709: return {0.2126, 0.0722};
    case YuvMatrix::bt2020: return {0.2627, 0.0593};
  }
  throw std::invalid_argument("unknown YUV matrix");
}

void require_three_channels(const Shape& s, const char* what) {
  if (s.c != 3)
    throw std::invalid_argument(std::string(what) + ": expected 3 channels, got " + s.str());
}

}  // namespace

std::string to_string(Colorimetry c) {
  switch (c) {
    case Colorimetry::bt709_sdr_8bit: return "BT709_SDR_8bit";
    case Colorimetry::bt2020_pq_10bit: return "BT2020_PQ_10bit";
  }
  throw std::invalid_argument("unknown colorimetry");
}

Colorimetry colorimetry_from_string(const std::string& s) {
  if (s == "BT709_SDR_8bit") return Colorimetry::bt709_sdr_8bit;
  if (s == "BT2020_PQ_10bit") return Colorimetry::bt2020_pq_10bit;
  throw std::invalid_argument("unknown colorimetry tag: " + s);
}

std::string to_string(YuvMatrix m) {
  switch (m) {
    case YuvMatrix::bt709: return "BT709";
    case YuvMatrix::bt2020: return "BT2020";
  }
  throw std::invalid_argument("unknown YUV matrix");
}

YuvMatrix yuv_matrix_from_string(const std::string& s) {
  if (s == "BT709") return YuvMatrix::bt709;
  if (s == "BT2020") return YuvMatrix::bt2020;
  throw std::invalid_argument("unknown YUV matrix tag: " + s);
}

int bit_depth(Colorimetry c) { return c == Colorimetry::bt709_sdr_8bit ? 8 : 10; }

YuvMatrix matrix_of(Colorimetry c) {
  return c == Colorimetry::bt709_sdr_8bit ? YuvMatrix::bt709 : YuvMatrix::bt2020;
}

ImageYuv::ImageYuv(Tensor<double> values, Colorimetry tag)
    : data(std::move(values)), colorimetry(tag), bits(bit_depth(tag)) {
  require_three_channels(data.shape(), "ImageYuv");
  for (auto& v : data.values()) v = std::clamp(v, 0.0, 1.0);
}

double pq_oetf(double linear) {
  const double y = std::pow(clamp_counted(linear), kM1);
  return std::pow((kC1 + kC2 * y) / (1.0 + kC3 * y), kM2);
}

double pq_eotf(double code) {
  const double e = std::pow(clamp_counted(code), 1.0 / kM2);
  const double num = std::max(e - kC1, 0.0);
  return std::pow(num / (kC2 - kC3 * e), 1.0 / kM1);
}

template <typename T>
Tensor<T> pq_oetf(const Tensor<T>& linear) {
  Tensor<T> out(linear.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(pq_oetf(linear[i]));
  return out;
}

template <typename T>
Tensor<T> pq_eotf(const Tensor<T>& code) {
  Tensor<T> out(code.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(pq_eotf(code[i]));
  return out;
}

std::uint64_t pq_clamp_count() { return g_pq_clamps.load(); }
void reset_pq_clamp_count() { g_pq_clamps.store(0); }

template <typename T>
Tensor<T> yuv_rgb_convert(const Tensor<T>& img, YuvMatrix matrix, ConvertDirection dir) {
  require_three_channels(img.shape(), "yuv_rgb_convert");
  const auto [kr, kb] = coeffs(matrix);
  const double kg = 1.0 - kr - kb;
  Tensor<T> out(img.shape());
  const std::size_t plane = img.shape().plane();
  for (int n = 0; n < img.shape().n; ++n) {
    const T* a = img.plane(n, 0);
    const T* b = img.plane(n, 1);
    const T* c = img.plane(n, 2);
    T* o0 = out.plane(n, 0);
    T* o1 = out.plane(n, 1);
    T* o2 = out.plane(n, 2);
    for (std::size_t i = 0; i < plane; ++i) {
      if (dir == ConvertDirection::rgb_to_yuv) {
        const double r = a[i], g = b[i], bl = c[i];
        const double y = kr * r + kg * g + kb * bl;
        o0[i] = static_cast<T>(y);
        o1[i] = static_cast<T>((bl - y) / (2.0 * (1.0 - kb)) + 0.5);
        o2[i] = static_cast<T>((r - y) / (2.0 * (1.0 - kr)) + 0.5);
      } else {
        const double y = a[i], u = b[i] - 0.5, v = c[i] - 0.5;
        const double r = y + 2.0 * (1.0 - kr) * v;
        const double bl = y + 2.0 * (1.0 - kb) * u;
        o0[i] = static_cast<T>(r);
        o1[i] = static_cast<T>((y - kr * r - kb * bl) / kg);
        o2[i] = static_cast<T>(bl);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> bt709_to_bt2020_primaries(const Tensor<T>& rgb) {
  require_three_channels(rgb.shape(), "bt709_to_bt2020_primaries");
  static constexpr double m[3][3] = {{0.6274, 0.3293, 0.0433},
                                     {0.0691, 0.9195, 0.0114},
                                     {0.0164, 0.0880, 0.8956}};
  Tensor<T> out(rgb.shape());
  const std::size_t plane = rgb.shape().plane();
  for (int n = 0; n < rgb.shape().n; ++n)
    for (int r = 0; r < 3; ++r) {
      T* o = out.plane(n, r);
      for (std::size_t i = 0; i < plane; ++i) {
        double acc = 0;
        for (int c = 0; c < 3; ++c) acc += m[r][c] * rgb.plane(n, c)[i];
        o[i] = static_cast<T>(acc);
      }
    }
  return out;
}

template <typename T>
CodeImage quantize(const Tensor<T>& img, int bits) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("quantize: unsupported bit depth");
  const double top = static_cast<double>((1u << bits) - 1u);
  CodeImage out{img.shape(), bits, std::vector<std::uint16_t>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double x = std::clamp(static_cast<double>(img[i]), 0.0, 1.0);
    out.codes[i] = static_cast<std::uint16_t>(std::floor(x * top + 0.5));
  }
  return out;
}

template <typename T>
Tensor<T> dequantize(const CodeImage& codes) {
  const double top = static_cast<double>((1u << codes.bits) - 1u);
  Tensor<T> out(codes.shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<T>(codes.codes[i] / top);
  return out;
}

template <typename T>
Tensor<T> requantize(const Tensor<T>& img, int bits) {
  return dequantize<T>(quantize(img, bits));
}

#define JSI_INSTANTIATE(T)                                                              \
  template Tensor<T> pq_oetf<T>(const Tensor<T>&);                                      \
  template Tensor<T> pq_eotf<T>(const Tensor<T>&);                                      \
  template Tensor<T> yuv_rgb_convert<T>(const Tensor<T>&, YuvMatrix, ConvertDirection); \
  template Tensor<T> bt709_to_bt2020_primaries<T>(const Tensor<T>&);                    \
  template CodeImage quantize<T>(const Tensor<T>&, int);                                \
  template Tensor<T> dequantize<T>(const CodeImage&);                                   \
  template Tensor<T> requantize<T>(const Tensor<T>&, int);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi
