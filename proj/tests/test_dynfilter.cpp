#include <doctest.h>

#include "jsi/dynfilter.hpp"
#include "jsi/gradcheck.hpp"
#include "jsi/ops.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace jsi;
using testutil::random;

namespace {

constexpr int kTaps = kernels::kSeparableTaps;

Tensor<double> delta_field(Shape xs, int s, int channels_per_pos, int center) {
  Tensor<double> f(Shape{xs.n, channels_per_pos * s * s, xs.h, xs.w});
  for (int n = 0; n < xs.n; ++n)
    for (int p = 0; p < s * s; ++p)
      for (int y = 0; y < xs.h; ++y)
        for (int x = 0; x < xs.w; ++x) f.at(n, channels_per_pos * p + center, y, x) = 1.0;
  return f;
}

Tensor<double> nearest(const Tensor<double>& x, int s) {
  const Shape xs = x.shape();
  Tensor<double> out(Shape{xs.n, xs.c, s * xs.h, s * xs.w});
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int y = 0; y < s * xs.h; ++y)
        for (int x0 = 0; x0 < s * xs.w; ++x0) out.at(n, c, y, x0) = x.at(n, c, y / s, x0 / s);
  return out;
}

Tensor<double> separable(const Tensor<double>& x, const Tensor<double>& v, const Tensor<double>& h,
                         int s) {
  return dynamic_separable_upsample(constant(x), SeparableFilterField<double>{constant(v), constant(h), s})
      .value();
}

Tensor<double> local2d(const Tensor<double>& x, const Tensor<double>& f, int s) {
  return dynamic_2d_upsample(constant(x), LocalFilterField2D<double>{constant(f), s}).value();
}

}  // namespace

TEST_CASE("separable: delta taps give nearest-neighbor replication") {
  for (int s : {1, 2, 4}) {
    const auto x = random(Shape{2, 3, 5, 6}, 10 + s);
    const auto d = delta_field(x.shape(), s, kTaps, 20);
    CHECK(testutil::bit_equal(separable(x, d, d, s), nearest(x, s)));
  }
}

TEST_CASE("separable: zero filters give zeros") {
  const auto x = random(Shape{1, 3, 4, 4}, 1);
  Tensor<double> z(Shape{1, kTaps * 4, 4, 4});
  const auto y = separable(x, z, z, 2);
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("separable matches the naive loop on random cases") {
  std::uint64_t seed = 100;
  int cases = 0;
  for (int s : {1, 2, 4})
    for (int k = 0; k < 8; ++k) {
      const Shape xs{1 + k % 2, 1 + k % 3, 3 + k, 6 - k % 3};
      const auto x = random(xs, seed++);
      const auto v = random(Shape{xs.n, kTaps * s * s, xs.h, xs.w}, seed++);
      const auto h = random(Shape{xs.n, kTaps * s * s, xs.h, xs.w}, seed++);
      CHECK(oracle::max_abs_diff(separable(x, v, h, s), oracle::dynamic_separable(x, v, h, s)) <
            1e-12);
      ++cases;
    }
  CHECK(cases >= 20);
}

TEST_CASE("separable at s = 1 equals explicit 41x41 filtering") {
  const auto x = random(Shape{1, 3, 8, 8}, 1);
  SUBCASE("per-pixel fields") {
    const auto v = random(Shape{1, kTaps, 8, 8}, 2), h = random(Shape{1, kTaps, 8, 8}, 3);
    CHECK(oracle::max_abs_diff(separable(x, v, h, 1), oracle::outer_product_41(x, v, h)) < 1e-10);
  }
  SUBCASE("vertical taps constant along each row: literal per-pixel outer product") {
    auto v = random(Shape{1, kTaps, 8, 1}, 4);
    Tensor<double> vf(Shape{1, kTaps, 8, 8});
    for (int k = 0; k < kTaps; ++k)
      for (int y = 0; y < 8; ++y)
        for (int x0 = 0; x0 < 8; ++x0) vf.at(0, k, y, x0) = v.at(0, k, y, 0);
    const auto h = random(Shape{1, kTaps, 8, 8}, 5);
    CHECK(oracle::max_abs_diff(separable(x, vf, h, 1), oracle::pixel_outer_product_41(x, vf, h)) <
          1e-10);
  }
}

TEST_CASE("2D: delta kernel replicates, uniform kernel preserves constants") {
  for (int s : {1, 2, 4}) {
    const auto x = random(Shape{1, 3, 5, 4}, s);
    CHECK(testutil::bit_equal(local2d(x, delta_field(x.shape(), s, 81, 40), s), nearest(x, s)));
  }
  const Tensor<double> c(Shape{1, 2, 6, 5}, 0.37);
  Tensor<double> u(Shape{1, 81 * 4, 6, 5}, 1.0 / 81.0);
  const auto y = local2d(c, u, 2);
  for (double v : y.values()) CHECK(std::abs(v - 0.37) < 1e-15);
}

TEST_CASE("2D matches the naive loop on random cases") {
  std::uint64_t seed = 500;
  int cases = 0;
  for (int s : {1, 2, 4})
    for (int k = 0; k < 8; ++k) {
      const Shape xs{1 + k % 2, 1 + k % 3, 5 + k % 3, 5 + k % 2};
      const auto x = random(xs, seed++);
      const auto f = random(Shape{xs.n, 81 * s * s, xs.h, xs.w}, seed++);
      CHECK(oracle::max_abs_diff(local2d(x, f, s), oracle::dynamic_2d(x, f, s)) < 1e-12);
      ++cases;
    }
  CHECK(cases >= 20);
}

TEST_CASE("linearity in the input for fixed fields") {
  const Shape xs{1, 2, 6, 6};
  const auto x1 = random(xs, 1), x2 = random(xs, 2);
  const double a = 0.75, b = -1.25;
  Tensor<double> mix(xs);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x1[i] + b * x2[i];
  const auto v = random(Shape{1, kTaps * 4, 6, 6}, 3), h = random(Shape{1, kTaps * 4, 6, 6}, 4);
  const auto f = random(Shape{1, 81 * 4, 6, 6}, 5);
  auto check = [&](const Tensor<double>& lhs, const Tensor<double>& r1, const Tensor<double>& r2) {
    double worst = 0;
    for (std::size_t i = 0; i < lhs.size(); ++i)
      worst = std::max(worst, std::abs(lhs[i] - (a * r1[i] + b * r2[i])));
    CHECK(worst < 1e-12);
  };
  check(separable(mix, v, h, 2), separable(x1, v, h, 2), separable(x2, v, h, 2));
  check(local2d(mix, f, 2), local2d(x1, f, 2), local2d(x2, f, 2));
}

TEST_CASE("gradients w.r.t. input and every filter field") {
  GradcheckOptions opt;
  opt.max_coords = 80;
  for (int s : {1, 2}) {
    const Shape xs{1, 2, 4, 5};
    auto sep = gradcheck(
        "sep",
        [s](const std::vector<Var<double>>& in) {
          return dynamic_separable_upsample(in[0], SeparableFilterField<double>{in[1], in[2], s});
        },
        {random(xs, 1), random(Shape{1, kTaps * s * s, 4, 5}, 2),
         random(Shape{1, kTaps * s * s, 4, 5}, 3)},
        opt);
    CHECK(sep.passed());
    auto loc = gradcheck(
        "2d",
        [s](const std::vector<Var<double>>& in) {
          return dynamic_2d_upsample(in[0], LocalFilterField2D<double>{in[1], s});
        },
        {random(xs, 4), random(Shape{1, 81 * s * s, 4, 5}, 5)}, opt);
    CHECK(loc.passed());
  }
}

TEST_CASE("per-pixel coefficient budget: 2 x 41 separable vs 9 x 9 local") {
  for (int s : {1, 2, 4}) {
    CHECK(2 * kTaps * s * s == 82 * s * s);
    CHECK(kernels::kLocalKernel * kernels::kLocalKernel * s * s == 81 * s * s);
  }
}

TEST_CASE("mismatched fields are rejected") {
  const auto x = constant(random(Shape{1, 3, 4, 4}, 1));
  auto good = constant(random(Shape{1, kTaps * 4, 4, 4}, 2));
  auto bad = constant(random(Shape{1, kTaps * 4, 4, 5}, 3));
  CHECK_THROWS_AS(dynamic_separable_upsample(x, SeparableFilterField<double>{good, bad, 2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(dynamic_separable_upsample(x, SeparableFilterField<double>{good, good, 4}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      dynamic_2d_upsample(x, LocalFilterField2D<double>{constant(random(Shape{1, 81, 3, 4}, 4)), 1}),
      std::invalid_argument);
}

TEST_CASE("parallel and reference dynamic kernels agree") {
  const Shape xs{2, 3, 7, 6};
  const int s = 2;
  const auto x = random(xs, 1), v = random(Shape{2, kTaps * 4, 7, 6}, 2),
             h = random(Shape{2, kTaps * 4, 7, 6}, 3), f = random(Shape{2, 81 * 4, 7, 6}, 4),
             gy = random(Shape{2, 3, 14, 12}, 5);
  Tensor<double> mid1(Shape{2, 3 * 4, 7, 6}), mid2(mid1.shape()), y1(gy.shape()), y2(gy.shape());
  kernels::dynamic_separable_forward(xs, s, x.data(), v.data(), h.data(), mid1.data(), y1.data());
  kernels::reference::dynamic_separable_forward(xs, s, x.data(), v.data(), h.data(), mid2.data(),
                                                y2.data());
  CHECK(oracle::max_abs_diff(y1, y2) < 1e-12);
  Tensor<double> gx1(xs), gx2(xs), gv1(v.shape()), gv2(v.shape()), gh1(h.shape()), gh2(h.shape());
  kernels::dynamic_separable_backward(xs, s, x.data(), v.data(), h.data(), mid1.data(), gy.data(),
                                      gx1.data(), gv1.data(), gh1.data());
  kernels::reference::dynamic_separable_backward(xs, s, x.data(), v.data(), h.data(), mid2.data(),
                                                 gy.data(), gx2.data(), gv2.data(), gh2.data());
  CHECK(oracle::max_abs_diff(gx1, gx2) < 1e-12);
  CHECK(oracle::max_abs_diff(gv1, gv2) < 1e-12);
  CHECK(oracle::max_abs_diff(gh1, gh2) < 1e-12);

  Tensor<double> z1(gy.shape()), z2(gy.shape());
  kernels::dynamic_2d_forward(xs, s, x.data(), f.data(), z1.data());
  kernels::reference::dynamic_2d_forward(xs, s, x.data(), f.data(), z2.data());
  CHECK(oracle::max_abs_diff(z1, z2) < 1e-12);
  Tensor<double> gx3(xs), gx4(xs), gf1(f.shape()), gf2(f.shape());
  kernels::dynamic_2d_backward(xs, s, x.data(), f.data(), gy.data(), gx3.data(), gf1.data());
  kernels::reference::dynamic_2d_backward(xs, s, x.data(), f.data(), gy.data(), gx4.data(),
                                          gf2.data());
  CHECK(oracle::max_abs_diff(gx3, gx4) < 1e-12);
  CHECK(oracle::max_abs_diff(gf1, gf2) < 1e-12);
}
