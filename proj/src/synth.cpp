#include "jsi/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "jsi/rng.hpp"
#include "jsi/snapshot.hpp"

namespace jsi {
namespace {

using Plane = std::vector<double>;

void gaussian_blur(Plane& p, int size, double sigma) {
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= total;
  Plane tmp(p.size());
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[i + radius] * p[y * size + std::clamp(x + i, 0, size - 1)];
      tmp[y * size + x] = acc;
    }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[i + radius] * tmp[std::clamp(y + i, 0, size - 1) * size + x];
      p[y * size + x] = acc;
    }
}

std::string patch_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d.jsit", prefix, i);
  return buf;
}

}  // namespace

int default_lr_size(int scale) {
  if (scale == 2) return 80;
  if (scale == 4) return 40;
  throw std::invalid_argument("scale must be 2 or 4, got " + std::to_string(scale));
}

Tensor<double> synth_scene(std::uint64_t seed, int size, const SynthOptions& opt) {
  Rng rng(seed);
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  // Texture in roughly [0, 1], shared across channels and tinted per component.
  std::array<Plane, 3> rgb;
  for (auto& c : rgb) c.assign(plane, 0.0);

  auto tint = [&rng]() {
    return std::array<double, 3>{rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0),
                                 rng.uniform(0.4, 1.0)};
  };

  // Ramp.
  {
    const auto t = tint();
    const double gx = rng.uniform(-1, 1), gy = rng.uniform(-1, 1), off = rng.uniform(0.2, 0.6);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double v = off + 0.25 * (gx * x + gy * y) / size;
        for (int c = 0; c < 3; ++c) rgb[c][y * size + x] += t[c] * v;
      }
  }
  // Gratings.
  const int gratings = 1 + static_cast<int>(rng.below(3));
  for (int g = 0; g < gratings; ++g) {
    const auto t = tint();
    const double theta = rng.uniform(0, std::numbers::pi);
    const double period = rng.uniform(3.0, size / 2.0);
    const double amp = rng.uniform(0.05, 0.25), phase = rng.uniform(0, 2 * std::numbers::pi);
    const double cx = std::cos(theta), sy = std::sin(theta);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double v =
            amp * std::sin(2 * std::numbers::pi * (cx * x + sy * y) / period + phase);
        for (int c = 0; c < 3; ++c) rgb[c][y * size + x] += t[c] * v;
      }
  }
  // Smoothed noise blobs.
  {
    Plane noise(plane);
    for (auto& v : noise) v = rng.normal();
    gaussian_blur(noise, size, rng.uniform(1.5, 5.0));
    double peak = 1e-12;
    for (double v : noise) peak = std::max(peak, std::abs(v));
    const auto t = tint();
    const double amp = rng.uniform(0.1, 0.3);
    for (std::size_t i = 0; i < plane; ++i)
      for (int c = 0; c < 3; ++c) rgb[c][i] += t[c] * amp * noise[i] / peak;
  }
  // Map the texture to mid-tone luminance.
  for (auto& c : rgb)
    for (auto& v : c) v = 0.002 + 0.06 * std::max(v, 0.0) * std::max(v, 0.0);
  // Hard-edged rectangles; some are highlights above the SDR clip.
  const int rects = 1 + static_cast<int>(rng.below(4));
  for (int r = 0; r < rects; ++r) {
    const int w = 2 + static_cast<int>(rng.below(size / 2));
    const int h = 2 + static_cast<int>(rng.below(size / 2));
    const int x0 = static_cast<int>(rng.below(size - 1));
    const int y0 = static_cast<int>(rng.below(size - 1));
    const bool highlight = rng.uniform() < 0.4;
    const double level = highlight ? rng.uniform(0.15, opt.peak) : rng.uniform(0.005, 0.09);
    const auto t = tint();
    for (int y = y0; y < std::min(size, y0 + h); ++y)
      for (int x = x0; x < std::min(size, x0 + w); ++x)
        for (int c = 0; c < 3; ++c) rgb[c][y * size + x] = level * t[c];
  }

  Tensor<double> out(Shape{1, 3, size, size});
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      out.plane(0, c)[i] = std::clamp(rgb[c][i], opt.floor, opt.peak);
  return out;
}

ImageYuv hdr_from_scene(const Tensor<double>& scene) {
  Tensor<double> rgb2020 = bt709_to_bt2020_primaries(scene);
  for (auto& v : rgb2020.values()) v = std::clamp(v, 0.0, 1.0);
  Tensor<double> yuv =
      yuv_rgb_convert(pq_oetf(rgb2020), YuvMatrix::bt2020, ConvertDirection::rgb_to_yuv);
  return ImageYuv(requantize(yuv, 10), Colorimetry::bt2020_pq_10bit);
}

ImageYuv sdr_from_scene(const Tensor<double>& scene, int scale, const SynthOptions& opt) {
  const Shape s = scene.shape();
  if (s.h % scale != 0 || s.w % scale != 0)
    throw std::invalid_argument("scene " + s.str() + " not divisible by scale");
  Tensor<double> low(Shape{s.n, s.c, s.h / scale, s.w / scale});
  const double inv = 1.0 / (scale * scale);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < low.shape().h; ++y)
        for (int x = 0; x < low.shape().w; ++x) {
          double acc = 0;
          for (int i = 0; i < scale; ++i)
            for (int j = 0; j < scale; ++j) acc += scene.at(n, c, y * scale + i, x * scale + j);
          const double clipped = std::min(acc * inv, opt.sdr_clip) / opt.sdr_clip;
          low.at(n, c, y, x) = std::pow(clipped, opt.sdr_gamma);
        }
  Tensor<double> yuv = yuv_rgb_convert(low, YuvMatrix::bt709, ConvertDirection::rgb_to_yuv);
  return ImageYuv(requantize(yuv, 8), Colorimetry::bt709_sdr_8bit);
}

std::vector<PatchPair> synth_dataset(std::uint64_t seed, int count, int scale, int lr_size,
                                     const SynthOptions& opt) {
  if (scale != 2 && scale != 4)
    throw std::invalid_argument("scale must be 2 or 4, got " + std::to_string(scale));
  if (count < 0) throw std::invalid_argument("count must be nonnegative");
  if (lr_size <= 0) lr_size = default_lr_size(scale);
  std::vector<PatchPair> pairs(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    const Tensor<double> scene = synth_scene(derive_seed(seed, i), lr_size * scale, opt);
    pairs[i] = PatchPair{sdr_from_scene(scene, scale, opt), hdr_from_scene(scene), scale};
  }
  return pairs;
}

void save_archive(const std::filesystem::path& dir, const std::vector<PatchPair>& pairs,
                  std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string lr = patch_name("lr", static_cast<int>(i));
    const std::string hr = patch_name("hr", static_cast<int>(i));
    save_snapshot(dir / lr, pairs[i].lr_sdr.data);
    save_snapshot(dir / hr, pairs[i].hr_hdr.data);
    files.push_back({{"lr", lr}, {"hr", hr}});
  }
  nlohmann::json m;
  m["seed"] = seed;
  m["scale"] = pairs.empty() ? 0 : pairs.front().scale;
  m["count"] = pairs.size();
  m["lr_size"] = pairs.empty() ? 0 : pairs.front().lr_sdr.data.shape().h;
  m["lr_colorimetry"] = to_string(Colorimetry::bt709_sdr_8bit);
  m["hr_colorimetry"] = to_string(Colorimetry::bt2020_pq_10bit);
  m["pairs"] = files;
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

std::vector<PatchPair> load_archive(const std::filesystem::path& dir, ArchiveInfo* info) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open patch archive manifest " + path.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  const int scale = m.at("scale").get<int>();
  const auto lr_tag = colorimetry_from_string(m.at("lr_colorimetry").get<std::string>());
  const auto hr_tag = colorimetry_from_string(m.at("hr_colorimetry").get<std::string>());
  std::vector<PatchPair> pairs;
  for (const auto& f : m.at("pairs")) {
    PatchPair p{ImageYuv(load_snapshot<double>(dir / f.at("lr").get<std::string>()), lr_tag),
                ImageYuv(load_snapshot<double>(dir / f.at("hr").get<std::string>()), hr_tag),
                scale};
    const Shape ls = p.lr_sdr.data.shape(), hs = p.hr_hdr.data.shape();
    if (hs.h != ls.h * scale || hs.w != ls.w * scale)
      throw std::runtime_error(dir.string() + ": pair " + f.at("lr").get<std::string>() +
                               " is not a x" + std::to_string(scale) + " pair");
    pairs.push_back(std::move(p));
  }
  if (info) {
    info->seed = m.at("seed").get<std::uint64_t>();
    info->scale = scale;
    info->count = static_cast<int>(pairs.size());
    info->lr_size = m.value("lr_size", 0);
  }
  return pairs;
}

template <typename T>
Tensor<T> stack(const std::vector<const Tensor<double>*>& items) {
  if (items.empty()) throw std::invalid_argument("stack: no items");
  const Shape first = items.front()->shape();
  Tensor<T> out(Shape{static_cast<int>(items.size()), first.c, first.h, first.w});
  const std::size_t block = first.numel();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Shape s = items[i]->shape();
    if (s.n != 1 || s.c != first.c || s.h != first.h || s.w != first.w)
      throw std::invalid_argument("stack: item " + s.str() + " does not match " + first.str());
    for (std::size_t k = 0; k < block; ++k) out[i * block + k] = static_cast<T>((*items[i])[k]);
  }
  return out;
}

template Tensor<float> stack<float>(const std::vector<const Tensor<double>*>&);
template Tensor<double> stack<double>(const std::vector<const Tensor<double>*>&);

}  // namespace jsi
