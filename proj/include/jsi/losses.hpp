#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jsi/discriminator.hpp"

namespace jsi {

struct LossWeights {
  double rec = 1.0;
  double adv = 1.0;
  double fm = 0.5;
  double d = 0.5;

  void validate() const;
};

/// Scalar loss terms of one training step. Terms a phase does not compute
/// are left empty and omitted from the JSON line.
struct LossReport {
  std::int64_t step = 0;
  std::string phase;
  double lr = 0.0;
  std::optional<double> rec, adv_g, adv_g_detail, fm, fm_detail, total_g, d1, d2;

  nlohmann::json to_json() const;
  static LossReport from_json(const nlohmann::json& j);
};

/// Logits are [n, 1, 1, 1]; each side is compared against the other side's
/// batch mean.
///   D: mean(relu(1 - (r - mean f))) + mean(relu(1 + (f - mean r)))
template <typename T> Var<T> rahinge_d(const Var<T>& real, const Var<T>& fake);
///   G: mean(relu(1 - (f - mean r))) + mean(relu(1 + (r - mean f)))
template <typename T> Var<T> rahinge_g(const Var<T>& real, const Var<T>& fake);

/// Sum over taps of mean squared difference; the real taps are detached.
template <typename T>
Var<T> feature_matching(const std::vector<Var<T>>& real, const std::vector<Var<T>>& fake);

template <typename T>
struct GeneratorLoss {
  Var<T> total;
  LossReport report;
};

/// total = rec * mse(Y, P) + adv * (adv_g + d * adv_g_detail) + fm * (fm + d * fm_detail).
/// Real-branch logits and taps enter as constants. Terms whose weight is
/// zero are reported but kept out of the graph.
template <typename T>
GeneratorLoss<T> generator_total(const Var<T>& y, const Var<T>& p,
                                 const DiscriminatorOutput<T>& d1_real,
                                 const DiscriminatorOutput<T>& d1_fake,
                                 const DiscriminatorOutput<T>& d2_real,
                                 const DiscriminatorOutput<T>& d2_fake, const LossWeights& w);

/// (rahinge_d on D1 logits, d * rahinge_d on D2 logits).
template <typename T>
std::pair<Var<T>, Var<T>> discriminator_totals(const DiscriminatorOutput<T>& d1_real,
                                               const DiscriminatorOutput<T>& d1_fake,
                                               const DiscriminatorOutput<T>& d2_real,
                                               const DiscriminatorOutput<T>& d2_fake,
                                               const LossWeights& w);

}  // namespace jsi
