#include "jsi/losses.hpp"

#include <stdexcept>

namespace jsi {
namespace {

template <typename T>
void check_logits(const Var<T>& real, const Var<T>& fake, const char* what) {
  if (real.value().empty() || fake.value().empty())
    throw std::invalid_argument(std::string(what) + ": empty logit batch");
}

// mean(relu(1 + sign * (a - mean(b))))
template <typename T>
Var<T> hinge(const Var<T>& a, const Var<T>& b, T sign) {
  Var<T> rel = add_broadcast(a, scale(mean(b), T(-1)));
  return mean(relu(add_scalar(scale(rel, sign), T(1))));
}

}  // namespace

void LossWeights::validate() const {
  if (rec < 0 || adv < 0 || fm < 0 || d < 0)
    throw std::invalid_argument("loss weights must be nonnegative");
}

nlohmann::json LossReport::to_json() const {
  nlohmann::json j;
  j["step"] = step;
  j["phase"] = phase;
  j["lr"] = lr;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("rec", rec);
  put("adv_g", adv_g);
  put("adv_g_detail", adv_g_detail);
  put("fm", fm);
  put("fm_detail", fm_detail);
  put("total_g", total_g);
  put("d1", d1);
  put("d2", d2);
  return j;
}

LossReport LossReport::from_json(const nlohmann::json& j) {
  LossReport r;
  r.step = j.at("step").get<std::int64_t>();
  r.phase = j.value("phase", "");
  r.lr = j.value("lr", 0.0);
  auto get = [&j](const char* key) -> std::optional<double> {
    if (j.contains(key) && j[key].is_number()) return j[key].get<double>();
    return std::nullopt;
  };
  r.rec = get("rec");
  r.adv_g = get("adv_g");
  r.adv_g_detail = get("adv_g_detail");
  r.fm = get("fm");
  r.fm_detail = get("fm_detail");
  r.total_g = get("total_g");
  r.d1 = get("d1");
  r.d2 = get("d2");
  return r;
}

template <typename T>
Var<T> rahinge_d(const Var<T>& real, const Var<T>& fake) {
  check_logits(real, fake, "rahinge_d");
  return add(hinge(real, fake, T(-1)), hinge(fake, real, T(1)));
}

template <typename T>
Var<T> rahinge_g(const Var<T>& real, const Var<T>& fake) {
  check_logits(real, fake, "rahinge_g");
  return add(hinge(fake, real, T(-1)), hinge(real, fake, T(1)));
}

template <typename T>
Var<T> feature_matching(const std::vector<Var<T>>& real, const std::vector<Var<T>>& fake) {
  if (real.size() != fake.size() || real.empty())
    throw std::invalid_argument("feature_matching: tap lists differ in length or are empty");
  Var<T> total;
  for (std::size_t i = 0; i < real.size(); ++i) {
    Var<T> term = mse(detach(real[i]), fake[i]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

template <typename T>
GeneratorLoss<T> generator_total(const Var<T>& y, const Var<T>& p,
                                 const DiscriminatorOutput<T>& d1_real,
                                 const DiscriminatorOutput<T>& d1_fake,
                                 const DiscriminatorOutput<T>& d2_real,
                                 const DiscriminatorOutput<T>& d2_fake, const LossWeights& w) {
  w.validate();
  Var<T> rec = mse(detach(y), p);
  Var<T> adv = rahinge_g(detach(d1_real.logit), d1_fake.logit);
  Var<T> adv_d = rahinge_g(detach(d2_real.logit), d2_fake.logit);
  Var<T> fm = feature_matching(d1_real.fm, d1_fake.fm);
  Var<T> fm_d = feature_matching(d2_real.fm, d2_fake.fm);

  GeneratorLoss<T> out;
  LossReport& r = out.report;
  r.rec = rec.item();
  r.adv_g = adv.item();
  r.adv_g_detail = adv_d.item();
  r.fm = fm.item();
  r.fm_detail = fm_d.item();

  std::vector<Var<T>> terms;
  auto push = [&terms](const Var<T>& v, double weight) {
    if (weight != 0.0) terms.push_back(weight == 1.0 ? v : scale(v, static_cast<T>(weight)));
  };
  push(rec, w.rec);
  push(adv, w.adv);
  push(adv_d, w.adv * w.d);
  push(fm, w.fm);
  push(fm_d, w.fm * w.d);
  if (terms.empty()) {
    out.total = scalar_constant<T>(T(0));
  } else {
    out.total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) out.total = add(out.total, terms[i]);
  }
  r.total_g = out.total.item();
  return out;
}

template <typename T>
std::pair<Var<T>, Var<T>> discriminator_totals(const DiscriminatorOutput<T>& d1_real,
                                               const DiscriminatorOutput<T>& d1_fake,
                                               const DiscriminatorOutput<T>& d2_real,
                                               const DiscriminatorOutput<T>& d2_fake,
                                               const LossWeights& w) {
  w.validate();
  Var<T> d1 = rahinge_d(d1_real.logit, d1_fake.logit);
  Var<T> d2 = scale(rahinge_d(d2_real.logit, d2_fake.logit), static_cast<T>(w.d));
  return {d1, d2};
}

#define JSI_INSTANTIATE(T)                                                                   \
  template Var<T> rahinge_d<T>(const Var<T>&, const Var<T>&);                                \
  template Var<T> rahinge_g<T>(const Var<T>&, const Var<T>&);                                \
  template Var<T> feature_matching<T>(const std::vector<Var<T>>&, const std::vector<Var<T>>&); \
  template GeneratorLoss<T> generator_total<T>(                                              \
      const Var<T>&, const Var<T>&, const DiscriminatorOutput<T>&,                           \
      const DiscriminatorOutput<T>&, const DiscriminatorOutput<T>&,                          \
      const DiscriminatorOutput<T>&, const LossWeights&);                                    \
  template std::pair<Var<T>, Var<T>> discriminator_totals<T>(                                \
      const DiscriminatorOutput<T>&, const DiscriminatorOutput<T>&,                          \
      const DiscriminatorOutput<T>&, const DiscriminatorOutput<T>&, const LossWeights&);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi
