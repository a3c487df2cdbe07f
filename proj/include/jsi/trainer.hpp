#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <vector>

#include "jsi/adam.hpp"
#include "jsi/checkpoint.hpp"
#include "jsi/config.hpp"
#include "jsi/metrics.hpp"
#include "jsi/synth.hpp"

namespace jsi {

/// Loss or gradient became non-finite; training stops without saving.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

template <typename T>
class Trainer {
 public:
  Trainer(const TrainConfig& config, Phase phase, std::vector<PatchPair> data);

  /// Generator weights from any checkpoint; optimizer state starts fresh.
  void load_pretrained(const std::filesystem::path& checkpoint);
  /// Full state (weights, moments, buffers, step) of a checkpoint of this phase.
  void resume(const std::filesystem::path& checkpoint);
  void save(const std::filesystem::path& checkpoint) const;

  /// One optimization step; returns its loss report.
  LossReport step();
  /// Steps until `stop_at` (default: config.steps), writing one JSON line
  /// per step to `log` and checkpoints to `checkpoint_dir`.
  void run(std::ostream* log, const std::filesystem::path& checkpoint_dir,
           std::int64_t stop_at = -1);

  /// Generator PSNR/SSIM on `pairs` in inference mode.
  MetricReport evaluate(const std::vector<PatchPair>& pairs) const;

  /// Dataset indices of the batch used at `step`; a pure function of (seed, step).
  std::vector<std::size_t> batch_indices(std::int64_t step) const;
  double lr_for(std::int64_t step) const;

  std::int64_t current_step() const { return step_; }
  Phase phase() const { return phase_; }
  const TrainConfig& config() const { return config_; }
  Generator<T>& generator() { return *g_; }
  Discriminator<T>* d1() { return d1_.get(); }
  Discriminator<T>* d2() { return d2_.get(); }

 private:
  LossReport pretrain_step(const Var<T>& x, const Var<T>& y, double lr);
  LossReport gan_step(const Var<T>& x, const Var<T>& y, double lr);
  std::vector<NamedStore<T>> stores() const;
  AdamOptions adam() const;

  TrainConfig config_;
  Phase phase_;
  std::vector<PatchPair> data_;
  std::unique_ptr<Generator<T>> g_;
  std::unique_ptr<Discriminator<T>> d1_, d2_;
  std::int64_t step_ = 0;
};

/// Generator prediction for a [n, 3, h, w] batch without recording.
template <typename T>
Tensor<double> predict(const Generator<T>& g, const Tensor<double>& x);

}  // namespace jsi
