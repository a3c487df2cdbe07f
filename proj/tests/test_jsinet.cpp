#include <doctest.h>

#include "jsi/gradcheck.hpp"
#include "jsi/jsinet.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace jsi;
using testutil::random;

namespace {

GeneratorConfig small(int scale, int features = 8) {
  GeneratorConfig c;
  c.scale = scale;
  c.features = features;
  c.guided.radius = 2;
  return c;
}

void zero(ParameterStore<double>& store, const std::string& conv) {
  store.get(conv + ".weight").value_mut().fill(0.0);
  store.get(conv + ".bias").value_mut().fill(0.0);
}

Var<double> input(Shape s, std::uint64_t seed) { return constant(random(s, seed, 0.0, 1.0)); }

}  // namespace

TEST_CASE("parameter counts") {
  GeneratorConfig c2, c4;
  c2.scale = 2;
  c4.scale = 4;
  CHECK(param_count(c2) == 1491087);
  CHECK(param_count(c4) == 3062835);
  CHECK(std::abs(param_count(c2) / 1.45e6 - 1.0) < 0.05);
  CHECK(std::abs(param_count(c4) / 3.03e6 - 1.0) < 0.05);
  CHECK(param_count(c4) > 2 * param_count(c2));
  Generator<float> g2(c2, 1), g4(c4, 1);
  CHECK(g2.param_count() == param_count(c2));
  CHECK(g4.param_count() == param_count(c4));
  // Head widths.
  CHECK(g2.params().get("dr.head_v.weight").value().shape() == Shape{164, 64, 3, 3});
  CHECK(g4.params().get("dr.head_h.weight").value().shape() == Shape{656, 64, 3, 3});
  CHECK(g4.params().get("lce.head.weight").value().shape() == Shape{81 * 16, 64, 3, 3});
  CHECK(g4.params().get("ir.up.weight").value().shape() == Shape{64 * 16, 64, 3, 3});
  CHECK(g4.params().get("ir.reduce.weight").value().shape() == Shape{64, 128, 3, 3});
}

TEST_CASE("config validation") {
  GeneratorConfig c;
  c.scale = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.scale = 2;
  c.dr_taps = 21;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("res block") {
  Generator<double> g(small(2), 3);
  auto& store = g.params();
  ResBlock<double> rb{Conv<double>{store.get("ir.head.rb1.conv1.weight").var,
                                   store.get("ir.head.rb1.conv1.bias").var, 1, 1},
                      Conv<double>{store.get("ir.head.rb1.conv2.weight").var,
                                   store.get("ir.head.rb1.conv2.bias").var, 1, 1}};
  const auto x = input(Shape{2, 8, 5, 6}, 1);
  CHECK(rb(x).shape() == x.shape());
  zero(store, "ir.head.rb1.conv1");
  zero(store, "ir.head.rb1.conv2");
  CHECK(testutil::bit_equal(rb(x).value(), x.value()));
  CHECK_THROWS_AS(rb(input(Shape{1, 4, 5, 5}, 2)), std::invalid_argument);

  GeneratorConfig full;
  Generator<float> gf(full, 1);
  Conv<float> c1{gf.params().get("dr.trunk.rb1.conv1.weight").var,
                 gf.params().get("dr.trunk.rb1.conv1.bias").var, 1, 1};
  Conv<float> c2{gf.params().get("dr.trunk.rb1.conv2.weight").var,
                 gf.params().get("dr.trunk.rb1.conv2.bias").var, 1, 1};
  ResBlock<float> block{c1, c2};
  CHECK(block(constant(Tensor<float>(Shape{1, 64, 7, 9}, 0.5f))).shape() == Shape{1, 64, 7, 9});
}

TEST_CASE("DR subnet") {
  for (int s : {2, 4}) {
    GeneratorConfig c;
    c.scale = s;
    Generator<float> g(c, 1);
    auto [field, i_dr] = g.dr_subnet(constant(Tensor<float>(Shape{1, 3, 10, 12}, 1.0f)));
    CHECK(field.vertical.shape().c == 41 * s * s);
    CHECK(field.horizontal.shape().c == 41 * s * s);
    CHECK(i_dr.shape() == Shape{1, 64, 10, 12});
  }
  Generator<double> g(small(2), 2);
  zero(g.params(), "dr.head_v");
  zero(g.params(), "dr.head_h");
  const auto out = g.forward(input(Shape{1, 3, 12, 12}, 1));
  for (double v : out.D.value().values()) CHECK(v == 0.0);
}

TEST_CASE("LCE subnet") {
  Generator<double> g(small(4), 2);
  const auto xb = input(Shape{2, 3, 9, 11}, 3);
  auto [mask, field] = g.lce_subnet(xb);
  CHECK(mask.shape() == Shape{2, 3, 36, 44});
  CHECK(field.coeffs.shape().c == 81 * 16);
  for (double v : mask.value().values()) {
    CHECK(v > 0.0);
    CHECK(v < 2.0);
  }
  zero(g.params(), "lce.head");
  auto [unit, f0] = g.lce_subnet(xb);
  for (double v : unit.value().values()) CHECK(v == 1.0);
}

TEST_CASE("contrast mask stays strictly inside (0, 2) on random inputs") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Generator<double> g(small(2), seed);
    const auto out = g.forward(input(Shape{1, 3, 12, 12}, seed + 10));
    for (double v : out.C_l.value().values()) {
      CHECK(v > 0.0);
      CHECK(v < 2.0);
    }
  }
}

TEST_CASE("IR subnet") {
  Generator<double> g(small(2), 4);
  const auto x = input(Shape{1, 3, 6, 7}, 5);
  const auto i_dr = constant(random(Shape{1, 8, 6, 7}, 6));
  CHECK(g.ir_subnet(x, i_dr).shape() == Shape{1, 3, 12, 14});
  CHECK_THROWS_AS(g.ir_subnet(x, constant(random(Shape{1, 4, 6, 7}, 6))), std::invalid_argument);
  g.params().get("ir.conv_out.weight").value_mut().fill(0.0);
  auto& bias = g.params().get("ir.conv_out.bias").value_mut();
  bias[0] = 0.1;
  bias[1] = 0.2;
  bias[2] = 0.3;
  const auto i = g.ir_subnet(x, i_dr).value();
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 12; ++y)
      for (int xx = 0; xx < 14; ++xx) CHECK(i.at(0, c, y, xx) == bias[c]);
}

TEST_CASE("end-to-end shapes at the training patch geometry") {
  GeneratorConfig c4, c2;
  c4.scale = 4;
  c2.scale = 2;
  Generator<float> g4(c4, 1), g2(c2, 1);
  NoGradGuard guard;
  CHECK(g4.forward(constant(Tensor<float>(Shape{1, 3, 40, 40}, 0.5f))).P.shape() ==
        Shape{1, 3, 160, 160});
  CHECK(g2.forward(constant(Tensor<float>(Shape{1, 3, 80, 80}, 0.5f))).P.shape() ==
        Shape{1, 3, 160, 160});
}

TEST_CASE("composition identities") {
  Generator<double> g(small(2), 5);
  const auto x = input(Shape{2, 3, 12, 12}, 7);

  const auto o = g.forward(x);
  const auto& I = o.I.value();
  const auto& D = o.D.value();
  const auto& C = o.C_l.value();
  const auto& P = o.P.value();
  for (std::size_t i = 0; i < P.size(); ++i) CHECK(P[i] == (I[i] + D[i]) * C[i]);
  CHECK(P.all_finite());

  zero(g.params(), "lce.head");
  const auto o2 = g.forward(x);
  for (std::size_t i = 0; i < P.size(); ++i)
    CHECK(o2.P.value()[i] == o2.I.value()[i] + o2.D.value()[i]);

  zero(g.params(), "dr.head_v");
  zero(g.params(), "dr.head_h");
  const auto o3 = g.forward(x);
  CHECK(testutil::bit_equal(o3.P.value(), o3.I.value()));
}

TEST_CASE("output is not clamped") {
  Generator<double> g(small(2), 6);
  zero(g.params(), "lce.head");
  zero(g.params(), "dr.head_v");
  zero(g.params(), "dr.head_h");
  g.params().get("ir.conv_out.weight").value_mut().fill(0.0);
  g.params().get("ir.conv_out.bias").value_mut().fill(1.5);
  const auto o = g.forward(input(Shape{1, 3, 12, 12}, 1));
  for (double v : o.P.value().values()) CHECK(v == 1.5);
}

TEST_CASE("every parameter is reachable from P") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Generator<double> g(small(2), seed);
    backward(sum(g.forward(input(Shape{2, 3, 12, 12}, seed + 20)).P));
    for (auto& p : g.params().params()) {
      INFO(p.name);
      REQUIRE(p.var.has_grad());
      CHECK(p.grad().all_finite());
      bool nonzero = false;
      for (double v : p.grad().values()) nonzero = nonzero || v != 0.0;
      CHECK(nonzero);
    }
  }
}

TEST_CASE("full generator gradients on an 8x8 input are finite") {
  GeneratorConfig c;
  c.scale = 2;
  c.guided.radius = 4;
  Generator<double> g(c, 1);
  backward(mean(g.forward(input(Shape{1, 3, 8, 8}, 1)).P));
  for (auto& p : g.params().params()) CHECK(p.grad().all_finite());
}

TEST_CASE("DR heads share the trunk but not each other") {
  Generator<double> g(small(2), 7);
  const auto x = input(Shape{1, 3, 12, 12}, 8);
  const auto base = g.forward(x);
  const Tensor<double> v0 = base.dr_filters.vertical.value(), h0 = base.dr_filters.horizontal.value();

  g.params().get("dr.head_v.weight").value_mut()[0] += 0.5;
  const auto a = g.forward(x);
  CHECK_FALSE(testutil::bit_equal(a.dr_filters.vertical.value(), v0));
  CHECK(testutil::bit_equal(a.dr_filters.horizontal.value(), h0));
  g.params().get("dr.head_v.weight").value_mut()[0] -= 0.5;

  for (auto& v : g.params().get("dr.trunk.conv_in.weight").value_mut().values()) v *= 1.1;
  const auto b = g.forward(x);
  CHECK_FALSE(testutil::bit_equal(b.dr_filters.vertical.value(), v0));
  CHECK_FALSE(testutil::bit_equal(b.dr_filters.horizontal.value(), h0));
}

TEST_CASE("same seed, same weights; forward is deterministic") {
  Generator<double> a(small(2), 9), b(small(2), 9), c(small(2), 10);
  for (std::size_t i = 0; i < a.params().params().size(); ++i)
    CHECK(testutil::bit_equal(a.params().params()[i].value(), b.params().params()[i].value()));
  CHECK_FALSE(testutil::bit_equal(a.params().get("ir.conv_in.weight").value(),
                                  c.params().get("ir.conv_in.weight").value()));
  const auto x = input(Shape{1, 3, 12, 12}, 1);
  CHECK(testutil::bit_equal(a.forward(x).P.value(), a.forward(x).P.value()));
}

TEST_CASE("subtraction mode feeds the detail difference") {
  auto c = small(2);
  c.mode = DecompositionMode::subtraction;
  Generator<double> g(c, 1);
  const auto x = input(Shape{1, 3, 12, 12}, 2);
  const auto o = g.forward(x);
  CHECK(o.input.mode == DecompositionMode::subtraction);
  for (std::size_t i = 0; i < x.value().size(); ++i)
    CHECK(std::abs(o.input.base.value()[i] + o.input.detail.value()[i] - x.value()[i]) < 1e-12);
}

TEST_CASE("network gradient checks") {
  for (const auto& c : gradcheck_suite())
    if (c.name == "generator" || c.name == "res_block") {
      const auto r = c.run();
      INFO(c.name << ": " << r.worst);
      CHECK(r.passed());
    }
}
