#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jsi/color.hpp"

namespace jsi {

/// Aligned (LR SDR, HR HDR) sample; hr is exactly `scale` times larger.
struct PatchPair {
  ImageYuv lr_sdr;  // [1, 3, h, w], BT709_SDR_8bit
  ImageYuv hr_hdr;  // [1, 3, s*h, s*w], BT2020_PQ_10bit
  int scale = 2;
};

struct SynthOptions {
  double peak = 0.8;           // brightest scene value, fraction of the PQ peak
  double floor = 1e-4;         // darkest scene value
  double sdr_clip = 0.1;       // SDR exposure clip, fraction of the PQ peak
  double sdr_gamma = 1.0 / 2.2;
};

/// Default LR side: 80 at scale 2, 40 at scale 4.
int default_lr_size(int scale);

/// Linear-light BT.709 RGB scene of side `size` for one patch.
Tensor<double> synth_scene(std::uint64_t seed, int size, const SynthOptions& opt = {});

/// HDR label: BT.2020 primaries, PQ, BT.2020 YUV, 10-bit codes.
ImageYuv hdr_from_scene(const Tensor<double>& scene);
/// SDR input: box downsample by s, exposure clip, gamma, BT.709 YUV, 8-bit codes.
ImageYuv sdr_from_scene(const Tensor<double>& scene, int scale, const SynthOptions& opt = {});

/// Patch i is generated from derive_seed(seed, i), so content does not
/// depend on the thread count.
std::vector<PatchPair> synth_dataset(std::uint64_t seed, int count, int scale, int lr_size = 0,
                                     const SynthOptions& opt = {});

struct ArchiveInfo {
  std::uint64_t seed = 0;
  int scale = 2;
  int count = 0;
  int lr_size = 0;
};

/// Writes lr_NNNN.jsit / hr_NNNN.jsit snapshots and manifest.json into `dir`.
void save_archive(const std::filesystem::path& dir, const std::vector<PatchPair>& pairs,
                  std::uint64_t seed);
std::vector<PatchPair> load_archive(const std::filesystem::path& dir, ArchiveInfo* info = nullptr);

/// Concatenates [1, c, h, w] tensors along the batch axis.
template <typename T>
Tensor<T> stack(const std::vector<const Tensor<double>*>& items);

}  // namespace jsi
