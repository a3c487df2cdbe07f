#include <doctest.h>

#include "jsi/gradcheck.hpp"
#include "jsi/guided_filter.hpp"
#include "jsi/jsinet.hpp"
#include "jsi/losses.hpp"
#include "jsi/ops.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace jsi;
using testutil::random;

namespace {

Var<double> logits(std::vector<double> v, bool grad = false) {
  Tensor<double> t(Shape{static_cast<int>(v.size()), 1, 1, 1});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
  return Var<double>(std::move(t), grad);
}

double d_loss(std::vector<double> r, std::vector<double> f) {
  return rahinge_d(logits(r), logits(f)).item();
}
double g_loss(std::vector<double> r, std::vector<double> f) {
  return rahinge_g(logits(r), logits(f)).item();
}

DiscriminatorOutput<double> fake_output(double logit, int n, double fm_value) {
  DiscriminatorOutput<double> o;
  o.logit = logits(std::vector<double>(n, logit));
  for (int i = 0; i < 4; ++i) o.fm.push_back(constant(Tensor<double>(Shape{n, 2, 4 >> (i / 2), 4 >> (i / 2)}, fm_value)));
  return o;
}

DiscriminatorOutput<double> random_output(std::uint64_t seed, int n) {
  DiscriminatorOutput<double> o;
  o.logit = constant(random(Shape{n, 1, 1, 1}, seed, -2, 2));
  for (int i = 0; i < 4; ++i) o.fm.push_back(constant(random(Shape{n, 3, 5 - i, 6 - i}, seed + 1 + i)));
  return o;
}

template <typename P>
bool touched(P& q) {
  if (!q.var.has_grad()) return false;
  for (double v : q.grad().values())
    if (v != 0.0) return true;
  return false;
}

double recombine(const LossReport& r, const LossWeights& w) {
  return w.rec * *r.rec + w.adv * (*r.adv_g + w.d * *r.adv_g_detail) +
         w.fm * (*r.fm + w.d * *r.fm_detail);
}

}  // namespace

TEST_CASE("rahinge_d hand values") {
  CHECK(d_loss({0, 0}, {0, 0}) == 2.0);
  CHECK(d_loss({1, 1}, {-1, -1}) == 0.0);
  CHECK(d_loss({2}, {0}) == 0.0);
  CHECK_THROWS_AS(d_loss({}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(d_loss({0}, {}), std::invalid_argument);
}

TEST_CASE("rahinge_g hand values") {
  CHECK(g_loss({0}, {0}) == 2.0);
  CHECK(g_loss({1}, {-1}) == 6.0);
  CHECK(g_loss({-1}, {1}) == 0.0);
  CHECK_THROWS_AS(g_loss({}, {1}), std::invalid_argument);
}

TEST_CASE("rahinge against a direct evaluation") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = random(Shape{5, 1, 1, 1}, seed, -3, 3), f = random(Shape{3, 1, 1, 1}, seed + 50, -3, 3);
    double mr = 0, mf = 0;
    for (double v : r.values()) mr += v / 5;
    for (double v : f.values()) mf += v / 3;
    double d = 0, g = 0;
    for (double v : r.values()) {
      d += std::max(0.0, 1 - (v - mf)) / 5;
      g += std::max(0.0, 1 + (v - mf)) / 5;
    }
    for (double v : f.values()) {
      d += std::max(0.0, 1 + (v - mr)) / 3;
      g += std::max(0.0, 1 - (v - mr)) / 3;
    }
    CHECK(std::abs(rahinge_d(constant(r), constant(f)).item() - d) < 1e-12);
    CHECK(std::abs(rahinge_g(constant(r), constant(f)).item() - g) < 1e-12);
  }
}

TEST_CASE("rahinge depends on logits only through differences") {
  const double k = 3.7;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = random(Shape{4, 1, 1, 1}, seed, -2, 2), f = random(Shape{4, 1, 1, 1}, seed + 99, -2, 2);
    Tensor<double> rk = r, fk = f;
    for (auto& v : rk.values()) v += k;
    for (auto& v : fk.values()) v += k;
    CHECK(std::abs(rahinge_d(constant(r), constant(f)).item() -
                   rahinge_d(constant(rk), constant(fk)).item()) < 1e-12);
    CHECK(std::abs(rahinge_g(constant(r), constant(f)).item() -
                   rahinge_g(constant(rk), constant(fk)).item()) < 1e-12);
  }
}

TEST_CASE("feature matching") {
  std::vector<Var<double>> a, b, c;
  std::vector<Tensor<double>> ta, tc;
  for (int i = 0; i < 4; ++i) {
    const auto t = random(Shape{2, 3, 8 >> i, 8 >> i}, 10 + i);
    Tensor<double> plus1 = t;
    for (auto& v : plus1.values()) v += 1.0;
    a.push_back(constant(t));
    b.push_back(constant(plus1));
    ta.push_back(t);
    tc.push_back(random(t.shape(), 30 + i));
    c.push_back(constant(tc.back()));
  }
  CHECK(feature_matching(a, a).item() == 0.0);
  CHECK(std::abs(feature_matching(a, b).item() - 4.0) < 1e-12);
  CHECK(std::abs(feature_matching(a, c).item() - oracle::feature_matching(ta, tc)) < 1e-12);

  std::vector<Var<double>> bad = a;
  bad[2] = constant(random(Shape{2, 3, 3, 3}, 1));
  CHECK_THROWS(feature_matching(a, bad));
  CHECK_THROWS_AS(feature_matching(a, std::vector<Var<double>>(a.begin(), a.begin() + 3)),
                  std::invalid_argument);
}

TEST_CASE("feature matching treats the real taps as constants") {
  std::vector<Var<double>> real, fake;
  for (int i = 0; i < 4; ++i) {
    real.emplace_back(random(Shape{1, 2, 3, 3}, i), true);
    fake.emplace_back(random(Shape{1, 2, 3, 3}, 10 + i), true);
  }
  backward(feature_matching(real, fake));
  for (auto& r : real) CHECK_FALSE(r.has_grad());
  for (auto& f : fake) CHECK(f.has_grad());
}

TEST_CASE("generator_total hand value and zero weights") {
  const auto y = constant(random(Shape{2, 3, 8, 8}, 1, 0, 1));
  const auto o = fake_output(0.3, 2, 0.5);
  const auto gl = generator_total(y, y, o, o, o, o, LossWeights{});
  CHECK(*gl.report.rec == 0.0);
  CHECK(*gl.report.fm == 0.0);
  CHECK(*gl.report.fm_detail == 0.0);
  CHECK(*gl.report.adv_g == 2.0);
  CHECK(*gl.report.adv_g_detail == 2.0);
  CHECK(gl.total.item() == 3.0);
  CHECK(*gl.report.total_g == 3.0);

  const auto z = generator_total(y, constant(random(Shape{2, 3, 8, 8}, 2)), random_output(3, 2),
                                 random_output(9, 2), random_output(15, 2), random_output(21, 2),
                                 LossWeights{0, 0, 0, 0});
  CHECK(z.total.item() == 0.0);
  CHECK(*z.report.rec > 0.0);

  LossWeights neg;
  neg.fm = -0.5;
  CHECK_THROWS_AS(generator_total(y, y, o, o, o, o, neg), std::invalid_argument);
}

TEST_CASE("total_g matches the weighted recombination of its parts") {
  const auto y = constant(random(Shape{2, 3, 8, 8}, 1, 0, 1));
  const auto p = constant(random(Shape{2, 3, 8, 8}, 2, 0, 1));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    LossWeights w{0.5 + 0.1 * seed, 1.0 / seed, 0.25 * seed, 0.05 * seed};
    const auto gl = generator_total(y, p, random_output(seed * 40, 2), random_output(seed * 40 + 5, 2),
                                    random_output(seed * 40 + 10, 2),
                                    random_output(seed * 40 + 15, 2), w);
    CHECK(std::abs(*gl.report.total_g - recombine(gl.report, w)) < 1e-9);
    CHECK(std::abs(gl.total.item() - *gl.report.total_g) == 0.0);
  }
}

TEST_CASE("generator_total is nondecreasing in each weight") {
  const auto y = constant(random(Shape{2, 3, 8, 8}, 1, 0, 1));
  const auto p = constant(random(Shape{2, 3, 8, 8}, 2, 0, 1));
  const auto a = random_output(3, 2), b = random_output(9, 2), c = random_output(15, 2),
             d = random_output(21, 2);
  auto total = [&](const LossWeights& w) { return generator_total(y, p, a, b, c, d, w).total.item(); };
  for (int field = 0; field < 4; ++field) {
    double prev = -1;
    for (double lambda : {0.0, 0.1, 0.5, 1.0, 2.0, 10.0}) {
      LossWeights w;
      (field == 0 ? w.rec : field == 1 ? w.adv : field == 2 ? w.fm : w.d) = lambda;
      const double t = total(w);
      CHECK(t >= prev);
      prev = t;
    }
  }
}

TEST_CASE("discriminator_totals") {
  const auto zero = fake_output(0.0, 2, 0.0);
  auto [d1, d2] = discriminator_totals(zero, zero, zero, zero, LossWeights{});
  CHECK(d1.item() == 2.0);
  CHECK(d2.item() == 1.0);

  const auto real = fake_output(1.0, 2, 0.0), fake = fake_output(-1.0, 2, 0.0);
  CHECK(discriminator_totals(real, fake, zero, zero, LossWeights{}).first.item() == 0.0);

  LossWeights no_detail;
  no_detail.d = 0.0;
  CHECK(discriminator_totals(zero, zero, zero, zero, no_detail).second.item() == 0.0);
}

TEST_CASE("gradient separation between the generator and the discriminators") {
  GeneratorConfig gc;
  gc.scale = 2;
  gc.features = 4;
  gc.guided.radius = 2;
  Generator<double> g(gc, 1);
  DiscriminatorConfig dc;
  dc.base_channels = 2;
  dc.input_size = 32;
  dc.fc_width = 4;
  Discriminator<double> d1(dc, 2, "d1"), d2(dc, 3, "d2");

  const auto x = constant(random(Shape{4, 3, 16, 16}, 4, 0, 1));
  const auto y = constant(random(Shape{4, 3, 32, 32}, 5, 0, 1));
  const auto p = g.forward(x).P;
  Var<double> y_d;
  {
    NoGradGuard guard;
    y_d = decompose(y, DecompositionMode::division, gc.guided).detail;
  }
  const auto p_d = decompose(p, DecompositionMode::division, gc.guided).detail;

  // Discriminator step on a detached prediction.
  const auto [l1, l2] = discriminator_totals(
      d1.forward(y, Mode::train), d1.forward(detach(p), Mode::train), d2.forward(y_d, Mode::train),
      d2.forward(detach(p_d), Mode::train), LossWeights{});
  backward(add(l1, l2));
  for (auto& q : g.params().params()) CHECK_FALSE(touched(q));
  // Biases that feed a batch norm get an exactly zero gradient, and so does
  // the logit shift, which moves real and fake logits together.
  for (auto& q : d1.params().params())
    if (q.name.find(".bias") == std::string::npos && q.name != "d1.fc2_bn.beta") {
      INFO(q.name);
      CHECK(touched(q));
    }
  d1.params().zero_grad();
  d2.params().zero_grad();

  // Generator step through frozen discriminators.
  d1.params().set_requires_grad(false);
  d2.params().set_requires_grad(false);
  const auto gl = generator_total(y, p, d1.forward(y, Mode::train), d1.forward(p, Mode::train),
                                  d2.forward(y_d, Mode::train), d2.forward(p_d, Mode::train),
                                  LossWeights{});
  backward(gl.total);
  for (auto& q : d1.params().params()) CHECK_FALSE(touched(q));
  for (auto& q : d2.params().params()) CHECK_FALSE(touched(q));
  for (auto& q : g.params().params()) CHECK(touched(q));

  // fm_detail is feature matching on the D2 taps of the detail layers.
  NoGradGuard guard;
  const double fm_d = feature_matching(d2.forward(y_d, Mode::train).fm, d2.forward(p_d, Mode::train).fm).item();
  CHECK(std::abs(fm_d - *gl.report.fm_detail) < 1e-9 * std::max(1.0, fm_d));
}

TEST_CASE("real logits enter the generator loss as constants") {
  auto real = logits({0.2, -0.4}, true), fake = logits({0.1, 0.3}, true);
  DiscriminatorOutput<double> r, f;
  r.logit = real;
  f.logit = fake;
  for (int i = 0; i < 4; ++i) {
    r.fm.emplace_back(random(Shape{2, 1, 2, 2}, i), true);
    f.fm.emplace_back(random(Shape{2, 1, 2, 2}, 10 + i), true);
  }
  const auto y = constant(random(Shape{2, 3, 4, 4}, 1));
  Var<double> p(random(Shape{2, 3, 4, 4}, 2), true);
  backward(generator_total(y, p, r, f, r, f, LossWeights{}).total);
  CHECK_FALSE(real.has_grad());
  for (auto& t : r.fm) CHECK_FALSE(t.has_grad());
  CHECK(fake.has_grad());
  CHECK(p.has_grad());
}

TEST_CASE("loss report JSON line") {
  LossReport r;
  r.step = 12;
  r.phase = "gan";
  r.lr = 1e-6;
  r.rec = 0.25;
  r.adv_g = 1.5;
  r.d1 = 2.0;
  const auto j = r.to_json();
  CHECK(j["step"] == 12);
  CHECK(j["rec"] == 0.25);
  CHECK_FALSE(j.contains("fm"));
  const auto back = LossReport::from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.step == 12);
  CHECK(back.phase == "gan");
  CHECK(back.lr == 1e-6);
  CHECK(*back.rec == 0.25);
  CHECK(*back.adv_g == 1.5);
  CHECK(*back.d1 == 2.0);
  CHECK_FALSE(back.fm.has_value());
  CHECK(j.dump().find('\n') == std::string::npos);
}

TEST_CASE("loss gradient checks") {
  for (const auto& c : gradcheck_suite()) {
    if (c.name.find("rahinge") == std::string::npos && c.name.find("feature") == std::string::npos &&
        c.name.find("total") == std::string::npos)
      continue;
    const auto r = c.run();
    INFO(c.name << ": " << r.worst);
    CHECK(r.passed());
  }
}
