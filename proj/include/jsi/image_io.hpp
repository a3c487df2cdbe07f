#pragma once

#include <filesystem>

#include "jsi/color.hpp"

namespace jsi {

/// 3-channel PNG. 8-bit images are stored as-is; deeper codes are stored
/// left-justified in 16-bit samples with an sBIT chunk recording the depth.
void write_png(const std::filesystem::path& path, const Tensor<double>& img, int bits);
/// Returns normalized [1, 3, h, w] values; `bits` receives the code depth.
Tensor<double> read_png(const std::filesystem::path& path, int* bits = nullptr);

struct RawYuvInfo {
  int width = 0;
  int height = 0;
  int bits = 8;
  YuvMatrix matrix = YuvMatrix::bt709;
};

/// Planar Y, U, V samples (u8 for 8-bit, u16 little-endian above) plus a
/// JSON sidecar at `path` + ".json".
void write_raw_yuv(const std::filesystem::path& path, const Tensor<double>& img, int bits,
                   YuvMatrix matrix);
Tensor<double> read_raw_yuv(const std::filesystem::path& path, RawYuvInfo* info = nullptr);

/// Dispatches on extension: .png, otherwise raw YUV with sidecar.
Tensor<double> read_image(const std::filesystem::path& path, int* bits = nullptr);

}  // namespace jsi
