#include "jsi/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "jsi/discriminator.hpp"
#include "jsi/dynfilter.hpp"
#include "jsi/guided_filter.hpp"
#include "jsi/jsinet.hpp"
#include "jsi/losses.hpp"
#include "jsi/rng.hpp"
#include "jsi/spectral_norm.hpp"

namespace jsi {
namespace {

double weighted_sum(const Tensor<double>& out, const Tensor<double>& r) {
  double acc = 0;
  for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * r[i];
  return acc;
}

std::vector<std::size_t> pick_coords(std::size_t size, std::size_t max_coords, Rng& rng) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  if (max_coords == 0 || max_coords >= size) return idx;
  for (std::size_t i = 0; i < max_coords; ++i) std::swap(idx[i], idx[i + rng.below(size - i)]);
  idx.resize(max_coords);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradcheckResult gradcheck_leaves(const std::string& name, const std::function<Var<double>()>& f,
                                 std::vector<Var<double>> leaves, const GradcheckOptions& opt) {
  GradcheckResult res;
  res.name = name;
  Rng rng(opt.seed);
  for (auto& l : leaves) l.zero_grad();
  const Var<double> out = f();
  const Tensor<double> r = normal_tensor<double>(out.shape(), rng);
  backward(sum(mul(out, constant(r))));

  auto eval = [&]() {
    NoGradGuard guard;
    return weighted_sum(f().value(), r);
  };
  double worst_score = -1;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Var<double>& leaf = leaves[li];
    const Tensor<double> analytic = leaf.has_grad() ? leaf.grad() : Tensor<double>(leaf.shape());
    for (std::size_t i : pick_coords(leaf.value().size(), opt.max_coords, rng)) {
      double& x = leaf.value_mut()[i];
      const double orig = x;
      const double h = opt.step * std::max(1.0, std::abs(orig));
      const double xp = orig + h, xm = orig - h;
      x = xp;
      const double lp = eval();
      x = xm;
      const double lm = eval();
      x = orig;
      const double numeric = (lp - lm) / (xp - xm);
      const double a = analytic[i];
      const double abs_err = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel_err = scale > 0 ? abs_err / scale : 0.0;
      ++res.checked;
      res.max_abs_err = std::max(res.max_abs_err, abs_err);
      const bool ok = abs_err < opt.abs_floor || rel_err < opt.rel_tol;
      if (abs_err >= opt.abs_floor) res.max_rel_err = std::max(res.max_rel_err, rel_err);
      if (!ok) ++res.failures;
      const double score = ok ? 0.0 : rel_err;
      if (score > worst_score) {
        worst_score = score;
        char buf[160];
        std::snprintf(buf, sizeof buf, "input %zu coord %zu: analytic %.10g numeric %.10g", li, i,
                      a, numeric);
        res.worst = buf;
      }
    }
  }
  return res;
}

GradcheckResult gradcheck(const std::string& name, const GradFunction& f,
                          std::vector<Tensor<double>> inputs, const GradcheckOptions& opt) {
  std::vector<Var<double>> leaves;
  for (auto& t : inputs) leaves.emplace_back(std::move(t), true);
  return gradcheck_leaves(name, [&]() { return f(leaves); }, leaves, opt);
}

namespace {

using V = Var<double>;
using Vs = std::vector<V>;

Tensor<double> rnd(Shape s, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  return uniform_tensor<double>(s, rng, lo, hi);
}

GradcheckCase make_case(std::string name, GradFunction f, std::vector<Tensor<double>> inputs,
                        GradcheckOptions opt = {}) {
  return {name, [name, f, inputs, opt]() { return gradcheck(name, f, inputs, opt); }};
}

std::vector<V> leaves_of(ParameterStore<double>& store) {
  std::vector<V> out;
  for (auto& p : store.params()) out.push_back(p.var);
  return out;
}

DiscriminatorOutput<double> fake_output(const Vs& in, std::size_t first) {
  DiscriminatorOutput<double> o;
  o.logit = in[first];
  for (std::size_t i = 1; i <= 4; ++i) o.fm.push_back(in[first + i]);
  return o;
}

DiscriminatorOutput<double> const_output(std::uint64_t seed) {
  DiscriminatorOutput<double> o;
  o.logit = constant(rnd(Shape{3, 1, 1, 1}, seed));
  for (int i = 0; i < 4; ++i) o.fm.push_back(constant(rnd(Shape{3, 2, 2, 2}, seed + 1 + i)));
  return o;
}

}  // namespace

std::vector<GradcheckCase> gradcheck_suite() {
  std::vector<GradcheckCase> s;
  const Shape img{2, 3, 8, 8};

  s.push_back(make_case("conv2d", [](const Vs& v) { return conv2d(v[0], v[1], v[2], 1, 1); },
                        {rnd(img, 1), rnd({4, 3, 3, 3}, 2), rnd({1, 4, 1, 1}, 3)}));
  s.push_back(make_case("conv2d_stride2_k4",
                        [](const Vs& v) { return conv2d(v[0], v[1], v[2], 2, 1); },
                        {rnd(img, 4), rnd({4, 3, 4, 4}, 5), rnd({1, 4, 1, 1}, 6)}));
  s.push_back(make_case("fully_connected", [](const Vs& v) { return linear(v[0], v[1], v[2]); },
                        {rnd({3, 2, 2, 2}, 7), rnd({5, 8, 1, 1}, 8), rnd({1, 5, 1, 1}, 9)}));
  s.push_back(make_case(
      "batch_norm_train",
      [](const Vs& v) {
        BatchNormStats<double> st(3);
        return batch_norm(v[0], v[1], v[2], st, Mode::train);
      },
      {rnd({4, 3, 3, 3}, 10), rnd({1, 3, 1, 1}, 11, 0.5, 1.5), rnd({1, 3, 1, 1}, 12)}));
  s.push_back(make_case(
      "batch_norm_inference",
      [](const Vs& v) {
        BatchNormStats<double> st(3);
        st.running_mean = rnd({1, 3, 1, 1}, 13);
        st.running_var = rnd({1, 3, 1, 1}, 14, 0.5, 2.0);
        return batch_norm(v[0], v[1], v[2], st, Mode::inference);
      },
      {rnd({2, 3, 3, 3}, 15), rnd({1, 3, 1, 1}, 16), rnd({1, 3, 1, 1}, 17)}));
  s.push_back(make_case("relu", [](const Vs& v) { return relu(v[0]); }, {rnd(img, 18)}));
  s.push_back(make_case("leaky_relu", [](const Vs& v) { return leaky_relu(v[0]); }, {rnd(img, 19)}));
  s.push_back(make_case("sigmoid", [](const Vs& v) { return sigmoid(v[0]); }, {rnd(img, 20, -4, 4)}));
  s.push_back(make_case("abs_square", [](const Vs& v) { return add(abs(v[0]), square(v[1])); },
                        {rnd(img, 21), rnd(img, 22)}));
  s.push_back(make_case(
      "arithmetic",
      [](const Vs& v) {
        V q = div(mul(v[0], v[1]), v[2]);
        return add_broadcast(add_scalar(scale(sub(q, v[0]), 1.5), 0.25), v[3]);
      },
      {rnd(img, 23), rnd(img, 24), rnd(img, 25, 0.5, 2.0), rnd({1, 1, 1, 1}, 26)}));
  s.push_back(make_case("reductions",
                        [](const Vs& v) {
                          return add(add(sum(v[0]), mean(square(v[0]))), mse(v[0], v[1]));
                        },
                        {rnd(img, 27), rnd(img, 28)}));
  s.push_back(make_case("pixel_shuffle", [](const Vs& v) { return pixel_shuffle(v[0], 2); },
                        {rnd({2, 8, 3, 3}, 29)}));
  s.push_back(make_case("pixel_unshuffle", [](const Vs& v) { return pixel_unshuffle(v[0], 2); },
                        {rnd({2, 2, 4, 6}, 30)}));
  s.push_back(make_case("concat_reshape",
                        [](const Vs& v) {
                          return reshape(concat_channels(v[0], v[1]), Shape{2, 1, 5, 16});
                        },
                        {rnd({2, 2, 4, 4}, 31), rnd({2, 3, 4, 4}, 32)}));
  s.push_back(make_case("box_filter", [](const Vs& v) { return box_filter(v[0], 2); },
                        {rnd({1, 2, 7, 7}, 33)}));
  for (int sc : {1, 2}) {
    const int t = kernels::kSeparableTaps * sc * sc;
    s.push_back(make_case(
        "dynamic_separable_s" + std::to_string(sc),
        [sc](const Vs& v) {
          return dynamic_separable_upsample(v[0], SeparableFilterField<double>{v[1], v[2], sc});
        },
        {rnd({1, 2, 5, 5}, 34), rnd({1, t, 5, 5}, 35), rnd({1, t, 5, 5}, 36)},
        GradcheckOptions{.max_coords = 60}));
    const int k = kernels::kLocalKernel * kernels::kLocalKernel * sc * sc;
    s.push_back(make_case(
        "dynamic_2d_s" + std::to_string(sc),
        [sc](const Vs& v) {
          return dynamic_2d_upsample(v[0], LocalFilterField2D<double>{v[1], sc});
        },
        {rnd({1, 2, 5, 5}, 37), rnd({1, k, 5, 5}, 38)}, GradcheckOptions{.max_coords = 60}));
  }
  s.push_back({"spectral_normalize", []() {
                 Rng rng(39);
                 Tensor<double> w = rnd({4, 3, 3, 3}, 40);
                 SpectralState<double> st = make_spectral_state<double>(w.shape(), rng);
                 power_iteration(w, st, 30);
                 return gradcheck(
                     "spectral_normalize",
                     [st](const Vs& v) { return spectral_normalize(v[0], st); }, {w});
               }});
  const GuidedFilterParams gp{2, 0.01};
  s.push_back(make_case("guided_filter", [gp](const Vs& v) { return guided_filter(v[0], gp); },
                        {rnd({1, 2, 10, 10}, 41, 0.05, 1.0)}));
  s.push_back(make_case(
      "decompose_division",
      [gp](const Vs& v) { return decompose(v[0], DecompositionMode::division, gp).detail; },
      {rnd({1, 2, 10, 10}, 42, 0.05, 1.0)}));
  s.push_back(make_case(
      "decompose_subtraction",
      [gp](const Vs& v) { return decompose(v[0], DecompositionMode::subtraction, gp).detail; },
      {rnd({1, 2, 10, 10}, 43, 0.05, 1.0)}));
  s.push_back(make_case("rahinge_d", [](const Vs& v) { return rahinge_d(v[0], v[1]); },
                        {rnd({4, 1, 1, 1}, 44, -2, 2), rnd({4, 1, 1, 1}, 45, -2, 2)}));
  s.push_back(make_case("rahinge_g", [](const Vs& v) { return rahinge_g(v[0], v[1]); },
                        {rnd({4, 1, 1, 1}, 46, -2, 2), rnd({4, 1, 1, 1}, 47, -2, 2)}));
  {
    std::vector<Tensor<double>> real, fake;
    for (int i = 0; i < 4; ++i) {
      real.push_back(rnd({2, 3, 4 >> (i / 2), 4 >> (i / 2)}, 48 + i));
      fake.push_back(rnd({2, 3, 4 >> (i / 2), 4 >> (i / 2)}, 52 + i));
    }
    s.push_back(make_case(
        "feature_matching",
        [real](const Vs& v) {
          Vs r;
          for (const auto& t : real) r.push_back(constant(t));
          return feature_matching(r, v);
        },
        fake));
  }
  {
    // Inputs: P, then fake logit + 4 taps for D1 and D2.
    std::vector<Tensor<double>> in{rnd({3, 3, 6, 6}, 56)};
    for (int d = 0; d < 2; ++d) {
      in.push_back(rnd({3, 1, 1, 1}, 57 + 10 * d));
      for (int i = 0; i < 4; ++i) in.push_back(rnd({3, 2, 2, 2}, 58 + 10 * d + i));
    }
    const Tensor<double> y = rnd({3, 3, 6, 6}, 80);
    s.push_back(make_case(
        "generator_total",
        [y](const Vs& v) {
          return generator_total(constant(y), v[0], const_output(81), fake_output(v, 1),
                                 const_output(91), fake_output(v, 6), LossWeights{})
              .total;
        },
        in));
  }
  s.push_back({"res_block", []() {
                 ParameterStore<double> store;
                 Rng rng(100);
                 ResBlock<double> rb{make_conv(store, rng, "rb.conv1", 4, 4, 3),
                                     make_conv(store, rng, "rb.conv2", 4, 4, 3)};
                 V x(rnd({1, 4, 6, 6}, 101), true);
                 auto leaves = leaves_of(store);
                 leaves.push_back(x);
                 return gradcheck_leaves("res_block", [&]() { return rb(x); }, leaves);
               }});
  s.push_back({"generator", []() {
                 GeneratorConfig cfg;
                 cfg.scale = 2;
                 cfg.features = 4;
                 cfg.guided = GuidedFilterParams{2, 0.01};
                 Generator<double> g(cfg, 106);
                 V x(rnd({1, 3, 8, 8}, 103, 0.05, 0.95), true);
                 auto leaves = leaves_of(g.params());
                 leaves.push_back(x);
                 return gradcheck_leaves("generator", [&]() { return g.forward(x).P; }, leaves,
                                         GradcheckOptions{.max_coords = 4});
               }});
  s.push_back({"discriminator", []() {
                 DiscriminatorConfig cfg;
                 cfg.base_channels = 2;
                 cfg.input_size = 32;
                 cfg.fc_width = 8;
                 Discriminator<double> d(cfg, 104, "d");
                 V x(rnd({4, 3, 32, 32}, 105), true);
                 auto leaves = leaves_of(d.params());
                 leaves.push_back(x);
                 return gradcheck_leaves(
                     "discriminator",
                     [&]() {
                       const auto o = d.forward(x, Mode::train);
                       Vs parts{o.logit};
                       for (const auto& f : o.fm) parts.push_back(reshape(f, Shape{1, 1, 1, static_cast<int>(f.value().size())}));
                       V total = sum(mul(parts[0], parts[0]));
                       for (std::size_t i = 1; i < parts.size(); ++i) total = add(total, mean(square(parts[i])));
                       return total;
                     },
                     leaves, GradcheckOptions{.max_coords = 4});
               }});
  return s;
}

}  // namespace jsi
