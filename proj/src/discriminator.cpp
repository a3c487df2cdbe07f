#include "jsi/discriminator.hpp"

#include <stdexcept>

namespace jsi {

void DiscriminatorConfig::validate() const {
  if (base_channels < 1 || blocks < 1 || fc_width < 1)
    throw std::invalid_argument("discriminator widths must be positive");
  const int div = 1 << (blocks + 1);
  if (input_size < div || input_size % div != 0)
    throw std::invalid_argument("discriminator input side " + std::to_string(input_size) +
                                " must be a positive multiple of " + std::to_string(div));
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config, std::uint64_t seed,
                                const std::string& name)
    : config_(config), name_(name) {
  config_.validate();
  Rng rng(seed);
  const int c = config_.base_channels;
  conv_in_ = sn_.size();
  add_sn("conv_in", Shape{c, 3, 3, 3}, 1, 1, rng);
  int ch = c;
  for (int b = 1; b <= config_.blocks; ++b) {
    const std::string p = "block" + std::to_string(b);
    Block blk{};
    blk.down = sn_.size();
    add_sn(p + ".conv_down", Shape{2 * ch, ch, 4, 4}, 2, 1, rng);
    blk.bn1 = bn_.size();
    add_bn(p + ".bn1", 2 * ch);
    blk.conv = sn_.size();
    add_sn(p + ".conv", Shape{2 * ch, 2 * ch, 3, 3}, 1, 1, rng);
    blk.bn2 = bn_.size();
    add_bn(p + ".bn2", 2 * ch);
    blocks_.push_back(blk);
    ch *= 2;
  }
  final_conv_ = sn_.size();
  add_sn("conv_out", Shape{ch, ch, 4, 4}, 2, 1, rng);
  final_bn_ = bn_.size();
  add_bn("bn_out", ch);
  const int side = config_.input_size >> (config_.blocks + 1);
  fc1_ = sn_.size();
  add_sn("fc1", Shape{config_.fc_width, ch * side * side, 1, 1}, 1, 0, rng);
  fc1_bn_ = bn_.size();
  add_bn("fc1_bn", config_.fc_width);
  fc2_ = sn_.size();
  add_sn("fc2", Shape{1, config_.fc_width, 1, 1}, 1, 0, rng);
  fc2_bn_ = bn_.size();
  if (config_.final_bn) add_bn("fc2_bn", 1);
  power_iteration(config_.power_warmup);
}

template <typename T>
SnLayer<T>& Discriminator<T>::add_sn(const std::string& name, Shape ws, int stride, int pad,
                                     Rng& rng) {
  const std::string full = name_ + "." + name;
  SnLayer<T> l;
  l.weight = store_.add(full + ".weight", xavier_init<T>(ws, rng));
  l.bias = store_.add(full + ".bias", Tensor<T>(Shape{1, ws.n, 1, 1}));
  l.state = make_spectral_state<T>(ws, rng);
  l.stride = stride;
  l.pad = pad;
  sn_.push_back(std::move(l));
  store_.add_buffer(full + ".sn_u", &sn_.back().state.u);
  store_.add_buffer(full + ".sn_v", &sn_.back().state.v);
  return sn_.back();
}

template <typename T>
BnLayer<T>& Discriminator<T>::add_bn(const std::string& name, int channels) {
  const std::string full = name_ + "." + name;
  BnLayer<T> l;
  l.gamma = store_.add(full + ".gamma", Tensor<T>(Shape{1, channels, 1, 1}, T(1)));
  l.beta = store_.add(full + ".beta", Tensor<T>(Shape{1, channels, 1, 1}));
  l.stats = BatchNormStats<T>(channels);
  bn_.push_back(std::move(l));
  store_.add_buffer(full + ".running_mean", &bn_.back().stats.running_mean);
  store_.add_buffer(full + ".running_var", &bn_.back().stats.running_var);
  return bn_.back();
}

template <typename T>
Var<T> Discriminator<T>::apply_conv(const SnLayer<T>& l, const Var<T>& x) const {
  return conv2d(x, spectral_normalize(l.weight, l.state), l.bias, l.stride, l.pad);
}

template <typename T>
Var<T> Discriminator<T>::apply_fc(const SnLayer<T>& l, const Var<T>& x) const {
  return linear(x, spectral_normalize(l.weight, l.state), l.bias);
}

template <typename T>
Var<T> Discriminator<T>::apply_bn(BnLayer<T>& l, const Var<T>& x, Mode mode) {
  return batch_norm(x, l.gamma, l.beta, l.stats, mode);
}

template <typename T>
DiscriminatorOutput<T> Discriminator<T>::forward(const Var<T>& x, Mode mode) {
  const Shape s = x.shape();
  if (s.c != 3 || s.h != config_.input_size || s.w != config_.input_size)
    throw std::invalid_argument("discriminator " + name_ + " expects [n, 3, " +
                                std::to_string(config_.input_size) + ", " +
                                std::to_string(config_.input_size) + "], got " + s.str());
  DiscriminatorOutput<T> out;
  Var<T> h = leaky_relu(apply_conv(sn_[conv_in_], x));
  for (const Block& b : blocks_) {
    h = leaky_relu(apply_bn(bn_[b.bn1], apply_conv(sn_[b.down], h), mode));
    out.fm.push_back(h);
    h = leaky_relu(apply_bn(bn_[b.bn2], apply_conv(sn_[b.conv], h), mode));
  }
  h = leaky_relu(apply_bn(bn_[final_bn_], apply_conv(sn_[final_conv_], h), mode));
  h = apply_bn(bn_[fc1_bn_], apply_fc(sn_[fc1_], h), mode);
  h = apply_fc(sn_[fc2_], h);
  if (config_.final_bn) h = apply_bn(bn_[fc2_bn_], h, mode);
  out.logit = h;
  return out;
}

template <typename T>
void Discriminator<T>::power_iteration(int iterations) {
  for (auto& l : sn_) jsi::power_iteration(l.weight.value(), l.state, iterations);
}

template <typename T>
std::vector<T> Discriminator<T>::normalized_sigmas() const {
  std::vector<T> out;
  NoGradGuard guard;
  for (const auto& l : sn_) {
    Var<T> w = spectral_normalize(l.weight, l.state);
    SpectralState<T> probe = l.state;
    out.push_back(jsi::power_iteration(w.value(), probe, 20));
  }
  return out;
}

template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace jsi
