#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsi/tensor.hpp"

namespace jsi {

enum class Colorimetry { bt709_sdr_8bit, bt2020_pq_10bit };
enum class YuvMatrix { bt709, bt2020 };
enum class ConvertDirection { rgb_to_yuv, yuv_to_rgb };

std::string to_string(Colorimetry c);
Colorimetry colorimetry_from_string(const std::string& s);
std::string to_string(YuvMatrix m);
YuvMatrix yuv_matrix_from_string(const std::string& s);

int bit_depth(Colorimetry c);
YuvMatrix matrix_of(Colorimetry c);

/// Normalized full-range YUV image, values in [0, 1].
struct ImageYuv {
  Tensor<double> data;  // [n, 3, h, w]
  Colorimetry colorimetry = Colorimetry::bt709_sdr_8bit;
  int bits = 8;

  /// Clamps into [0, 1] and checks the channel count.
  ImageYuv(Tensor<double> values, Colorimetry tag);
  ImageYuv() = default;
};

// SMPTE ST 2084, on luminance normalized to the 10000-nit peak.
double pq_oetf(double linear);
double pq_eotf(double code);
/// Inputs outside [0, 1] are clamped and counted.
template <typename T> Tensor<T> pq_oetf(const Tensor<T>& linear);
template <typename T> Tensor<T> pq_eotf(const Tensor<T>& code);
std::uint64_t pq_clamp_count();
void reset_pq_clamp_count();

/// Full-range conversion with Y in [0, 1] and chroma offset by 0.5.
template <typename T>
Tensor<T> yuv_rgb_convert(const Tensor<T>& img, YuvMatrix matrix, ConvertDirection dir);

/// Linear-light RGB from BT.709 primaries to BT.2020 primaries.
template <typename T> Tensor<T> bt709_to_bt2020_primaries(const Tensor<T>& rgb);

struct CodeImage {
  Shape shape;
  int bits = 8;
  std::vector<std::uint16_t> codes;
};

/// floor(x * (2^bits - 1) + 0.5) after clamping to [0, 1].
template <typename T> CodeImage quantize(const Tensor<T>& img, int bits);
template <typename T> Tensor<T> dequantize(const CodeImage& codes);
/// dequantize(quantize(img, bits)).
template <typename T> Tensor<T> requantize(const Tensor<T>& img, int bits);

}  // namespace jsi
