#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "jsi/layers.hpp"
#include "jsi/spectral_norm.hpp"

namespace jsi {

struct DiscriminatorConfig {
  int base_channels = 32;
  int blocks = 4;
  int input_size = 160;  // H; must be divisible by 2^(blocks + 1)
  int fc_width = 512;
  bool final_bn = true;  // batch norm on the logit
  int power_warmup = 50;  // power iterations run at construction

  void validate() const;
};

template <typename T>
struct DiscriminatorOutput {
  Var<T> logit;          // [n, 1, 1, 1]
  std::vector<Var<T>> fm;  // first LReLU output of each DisBlock, by depth
};

/// Spectrally normalized conv or FC weight.
template <typename T>
struct SnLayer {
  Var<T> weight;
  Var<T> bias;
  SpectralState<T> state;
  int stride = 1;
  int pad = 1;
};

template <typename T>
struct BnLayer {
  Var<T> gamma;
  Var<T> beta;
  BatchNormStats<T> stats;
};

template <typename T>
class Discriminator {
 public:
  /// Parameter and buffer names are prefixed with `name` + ".".
  Discriminator(const DiscriminatorConfig& config, std::uint64_t seed, const std::string& name);
  Discriminator(const Discriminator&) = delete;
  Discriminator& operator=(const Discriminator&) = delete;

  /// Updates batch-norm running statistics in train mode.
  DiscriminatorOutput<T> forward(const Var<T>& x, Mode mode);

  /// One (or more) power iteration on every normalized weight.
  void power_iteration(int iterations = 1);
  /// Leading singular value of every effective (normalized) weight, in layer
  /// order, re-estimated with 20 power iterations on a copy of the vectors.
  std::vector<T> normalized_sigmas() const;

  ParameterStore<T>& params() { return store_; }
  const DiscriminatorConfig& config() const { return config_; }
  const std::string& name() const { return name_; }

 private:
  SnLayer<T>& add_sn(const std::string& name, Shape weight_shape, int stride, int pad, Rng& rng);
  BnLayer<T>& add_bn(const std::string& name, int channels);
  Var<T> apply_conv(const SnLayer<T>& l, const Var<T>& x) const;
  Var<T> apply_fc(const SnLayer<T>& l, const Var<T>& x) const;
  Var<T> apply_bn(BnLayer<T>& l, const Var<T>& x, Mode mode);

  DiscriminatorConfig config_;
  std::string name_;
  ParameterStore<T> store_;
  std::deque<SnLayer<T>> sn_;  // stable addresses for registered buffers
  std::deque<BnLayer<T>> bn_;
  // Indices into sn_ / bn_ per stage.
  struct Block {
    std::size_t down, conv, bn1, bn2;
  };
  std::size_t conv_in_ = 0;
  std::vector<Block> blocks_;
  std::size_t final_conv_ = 0, final_bn_ = 0, fc1_ = 0, fc1_bn_ = 0, fc2_ = 0, fc2_bn_ = 0;
};

}  // namespace jsi
