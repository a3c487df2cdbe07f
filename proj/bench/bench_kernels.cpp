// Times each fast kernel against its serial reference.
//
//   bench_kernels [--reps N] [--threads T]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "jsi/kernels.hpp"
#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"

using namespace jsi;
namespace k = jsi::kernels;

namespace {

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

double seconds(int reps, const std::function<void()>& fn) {
  fn();
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

float max_diff(const std::vector<float>& a, const std::vector<float>& b) {
  float m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void row(const char* name, double ref, double fast, double gflop, float diff) {
  std::printf("%-28s %10.2f %10.2f %8.1fx %9.1f %10.2e\n", name, ref * 1e3, fast * 1e3, ref / fast,
              gflop / fast, diff);
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 3;
  for (int i = 1; i + 1 < argc; ++i) {
    if (!std::strcmp(argv[i], "--reps")) reps = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--threads")) set_num_threads(std::atoi(argv[++i]));
  }
  std::printf("%-28s %10s %10s %9s %9s %10s\n", "kernel", "ref ms", "fast ms", "speedup", "GFLOP/s",
              "max |diff|");

  {
    // Generator trunk conv at the x4 training patch size.
    k::ConvGeometry g{4, 64, 40, 40, 64, 3, 1, 1};
    const auto x = noise(4 * 64 * 40 * 40, 1), w = noise(64 * 64 * 9, 2), b = noise(64, 3);
    std::vector<float> y0(4 * 64 * 40 * 40), y1(y0.size());
    const double tr = seconds(1, [&] { k::reference::conv2d_forward(g, x.data(), w.data(), b.data(), y0.data()); });
    const double tf = seconds(reps, [&] { k::conv2d_forward(g, x.data(), w.data(), b.data(), y1.data()); });
    row("conv3x3 64->64 40x40 n4", tr, tf, 2.0 * 4 * 64 * 64 * 9 * 1600 / 1e9, max_diff(y0, y1));

    std::vector<float> gx0(x.size()), gx1(x.size()), gw0(w.size()), gw1(w.size()), gb0(64), gb1(64);
    const double br = seconds(1, [&] {
      k::reference::conv2d_backward(g, x.data(), w.data(), y0.data(), gx0.data(), gw0.data(), gb0.data());
    });
    const double bf = seconds(reps, [&] {
      std::fill(gx1.begin(), gx1.end(), 0.f);
      std::fill(gw1.begin(), gw1.end(), 0.f);
      std::fill(gb1.begin(), gb1.end(), 0.f);
      k::conv2d_backward(g, x.data(), w.data(), y0.data(), gx1.data(), gw1.data(), gb1.data());
    });
    row("conv3x3 backward", br, bf, 4.0 * 4 * 64 * 64 * 9 * 1600 / 1e9, std::max(max_diff(gx0, gx1), max_diff(gw0, gw1)));
  }
  {
    k::ConvGeometry g{4, 32, 160, 160, 64, 4, 2, 1};
    const auto x = noise(4 * 32 * 160 * 160, 4), w = noise(64 * 32 * 16, 5), b = noise(64, 6);
    std::vector<float> y0(4 * 64 * 80 * 80), y1(y0.size());
    const double tr = seconds(1, [&] { k::reference::conv2d_forward(g, x.data(), w.data(), b.data(), y0.data()); });
    const double tf = seconds(reps, [&] { k::conv2d_forward(g, x.data(), w.data(), b.data(), y1.data()); });
    row("conv4x4/2 32->64 160 n4", tr, tf, 2.0 * 4 * 64 * 32 * 16 * 6400 / 1e9, max_diff(y0, y1));
  }
  {
    const int planes = 12, h = 160, w = 160, r = 5;
    const auto x = noise(planes * h * w, 7);
    std::vector<float> y0(x.size()), y1(x.size());
    const double tr = seconds(1, [&] { k::reference::box_filter_forward(planes, h, w, r, x.data(), y0.data()); });
    const double tf = seconds(reps, [&] { k::box_filter_forward(planes, h, w, r, x.data(), y1.data()); });
    row("box filter r5 12x160x160", tr, tf, 0, max_diff(y0, y1));
  }
  {
    const int s = 4;
    const Shape xs{4, 3, 40, 40};
    const std::size_t field = static_cast<std::size_t>(4) * k::kSeparableTaps * s * s * 1600;
    const auto x = noise(xs.numel(), 8), v = noise(field, 9), hz = noise(field, 10);
    std::vector<float> mid0(4 * 3 * s * s * 1600), mid1(mid0.size()), y0(4 * 3 * 160 * 160), y1(y0.size());
    const double tr = seconds(1, [&] {
      k::reference::dynamic_separable_forward(xs, s, x.data(), v.data(), hz.data(), mid0.data(), y0.data());
    });
    const double tf = seconds(reps, [&] {
      k::dynamic_separable_forward(xs, s, x.data(), v.data(), hz.data(), mid1.data(), y1.data());
    });
    row("separable 41 taps x4 n4", tr, tf, 4.0 * 3 * 16 * 1600 * 41 * 4 / 1e9, max_diff(y0, y1));
  }
  {
    const int s = 4;
    const Shape xs{4, 3, 40, 40};
    const std::size_t field = static_cast<std::size_t>(4) * 81 * s * s * 1600;
    const auto x = noise(xs.numel(), 11), c = noise(field, 12);
    std::vector<float> y0(4 * 3 * 160 * 160), y1(y0.size());
    const double tr = seconds(1, [&] { k::reference::dynamic_2d_forward(xs, s, x.data(), c.data(), y0.data()); });
    const double tf = seconds(reps, [&] { k::dynamic_2d_forward(xs, s, x.data(), c.data(), y1.data()); });
    row("local 9x9 x4 n4", tr, tf, 2.0 * 4 * 3 * 16 * 1600 * 81 / 1e9, max_diff(y0, y1));
  }
  return 0;
}
