#include "jsi/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jsi {
namespace {

constexpr std::uint64_t kGeneratorStream = 1;
constexpr std::uint64_t kD1Stream = 2;
constexpr std::uint64_t kD2Stream = 3;
constexpr std::uint64_t kShuffleStream = 1u << 20;

void require_finite(double v, const char* what, std::int64_t step) {
  if (!std::isfinite(v))
    throw DivergenceError(std::string("non-finite ") + what + " at step " + std::to_string(step));
}

}  // namespace

template <typename T>
Trainer<T>::Trainer(const TrainConfig& config, Phase phase, std::vector<PatchPair> data)
    : config_(config), phase_(phase), data_(std::move(data)) {
  config_.validate();
  if (data_.empty()) throw std::invalid_argument("training set is empty");
  if (data_.size() < static_cast<std::size_t>(config_.batch))
    throw std::invalid_argument("training set has " + std::to_string(data_.size()) +
                                " pairs, fewer than the batch size " +
                                std::to_string(config_.batch));
  for (const auto& p : data_)
    if (p.scale != config_.scale)
      throw std::invalid_argument("dataset scale " + std::to_string(p.scale) +
                                  " does not match config scale " + std::to_string(config_.scale));
  g_ = std::make_unique<Generator<T>>(config_.generator(),
                                      derive_seed(config_.seed, kGeneratorStream));
  if (phase_ == Phase::gan) {
    const int side = data_.front().hr_hdr.data.shape().h;
    const DiscriminatorConfig dc = config_.discriminator(side);
    d1_ = std::make_unique<Discriminator<T>>(dc, derive_seed(config_.seed, kD1Stream), "d1");
    d2_ = std::make_unique<Discriminator<T>>(dc, derive_seed(config_.seed, kD2Stream), "d2");
  }
}

template <typename T>
std::vector<NamedStore<T>> Trainer<T>::stores() const {
  std::vector<NamedStore<T>> out{{"generator", &g_->params()}};
  if (d1_) out.push_back({"d1", &d1_->params()});
  if (d2_) out.push_back({"d2", &d2_->params()});
  return out;
}

template <typename T>
AdamOptions Trainer<T>::adam() const {
  AdamOptions o;
  o.clip_norm = config_.grad_clip;
  return o;
}

template <typename T>
void Trainer<T>::load_pretrained(const std::filesystem::path& checkpoint) {
  load_checkpoint<T>(checkpoint, {{"generator", &g_->params()}}, false);
}

template <typename T>
void Trainer<T>::resume(const std::filesystem::path& checkpoint) {
  const CheckpointInfo info = read_checkpoint_info(checkpoint);
  if (info.phase != to_string(phase_))
    throw std::invalid_argument(checkpoint.string() + ": checkpoint phase '" + info.phase +
                                "' does not match '" + to_string(phase_) + "'");
  load_checkpoint<T>(checkpoint, stores(), true);
  step_ = info.step;
}

template <typename T>
void Trainer<T>::save(const std::filesystem::path& checkpoint) const {
  CheckpointInfo info;
  info.phase = to_string(phase_);
  info.step = step_;
  info.seed = config_.seed;
  info.config = nlohmann::json(config_.to_key_values());
  save_checkpoint<T>(checkpoint, info, stores());
}

template <typename T>
std::vector<std::size_t> Trainer<T>::batch_indices(std::int64_t step) const {
  const std::size_t count = data_.size();
  const std::size_t batch = static_cast<std::size_t>(config_.batch);
  const std::size_t per_pass = count / batch;
  const std::uint64_t pass = static_cast<std::uint64_t>(step) / per_pass;
  const std::size_t slot = static_cast<std::size_t>(step) % per_pass;
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(config_.seed, kShuffleStream + pass));
  for (std::size_t i = count; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  return {perm.begin() + slot * batch, perm.begin() + (slot + 1) * batch};
}

template <typename T>
double Trainer<T>::lr_for(std::int64_t step) const {
  return lr_at(config_.schedule(phase_), 0.0, static_cast<double>(step),
               config_.effective_steps_per_epoch(phase_));
}

template <typename T>
LossReport Trainer<T>::step() {
  const auto idx = batch_indices(step_);
  std::vector<const Tensor<double>*> xs, ys;
  for (std::size_t i : idx) {
    xs.push_back(&data_[i].lr_sdr.data);
    ys.push_back(&data_[i].hr_hdr.data);
  }
  const Var<T> x = constant(stack<T>(xs));
  const Var<T> y = constant(stack<T>(ys));
  const double lr = lr_for(step_);
  LossReport r = phase_ == Phase::pretrain ? pretrain_step(x, y, lr) : gan_step(x, y, lr);
  r.step = step_;
  r.phase = to_string(phase_);
  r.lr = lr;
  ++step_;
  return r;
}

template <typename T>
LossReport Trainer<T>::pretrain_step(const Var<T>& x, const Var<T>& y, double lr) {
  g_->params().zero_grad();
  const GeneratorOutput<T> out = g_->forward(x);
  const Var<T> loss = mse(y, out.P);
  LossReport r;
  r.rec = loss.item();
  require_finite(*r.rec, "reconstruction loss", step_);
  backward(loss);
  try {
    adam_step(g_->params(), lr, adam());
  } catch (const NumericalError& e) {
    throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step_));
  }
  return r;
}

template <typename T>
LossReport Trainer<T>::gan_step(const Var<T>& x, const Var<T>& y, double lr) {
  const LossWeights& w = config_.weights;
  g_->params().zero_grad();
  d1_->params().zero_grad();
  d2_->params().zero_grad();

  const GeneratorOutput<T> out = g_->forward(x);
  const Var<T> p = out.P;
  Var<T> y_d;
  {
    NoGradGuard guard;
    y_d = decompose(y, DecompositionMode::division, config_.guided).detail;
  }
  const Var<T> p_d = decompose(p, DecompositionMode::division, config_.guided).detail;

  // Discriminator updates on a constant P.
  d1_->power_iteration(1);
  d2_->power_iteration(1);
  const auto d1_real = d1_->forward(y, Mode::train);
  const auto d1_fake = d1_->forward(detach(p), Mode::train);
  const auto d2_real = d2_->forward(y_d, Mode::train);
  const auto d2_fake = d2_->forward(detach(p_d), Mode::train);
  const auto [l1, l2] = discriminator_totals(d1_real, d1_fake, d2_real, d2_fake, w);
  LossReport r;
  r.d1 = l1.item();
  r.d2 = l2.item();
  require_finite(*r.d1, "D1 loss", step_);
  require_finite(*r.d2, "D2 loss", step_);
  try {
    backward(l1);
    adam_step(d1_->params(), lr, adam());
    backward(l2);
    adam_step(d2_->params(), lr, adam());
  } catch (const NumericalError& e) {
    throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step_));
  }

  // Generator update through fresh forwards of the frozen discriminators.
  d1_->params().set_requires_grad(false);
  d2_->params().set_requires_grad(false);
  GeneratorLoss<T> gl;
  try {
    const auto g1_real = d1_->forward(y, Mode::train);
    const auto g1_fake = d1_->forward(p, Mode::train);
    const auto g2_real = d2_->forward(y_d, Mode::train);
    const auto g2_fake = d2_->forward(p_d, Mode::train);
    gl = generator_total(y, p, g1_real, g1_fake, g2_real, g2_fake, w);
  } catch (...) {
    d1_->params().set_requires_grad(true);
    d2_->params().set_requires_grad(true);
    throw;
  }
  d1_->params().set_requires_grad(true);
  d2_->params().set_requires_grad(true);
  gl.report.d1 = r.d1;
  gl.report.d2 = r.d2;
  require_finite(*gl.report.total_g, "generator loss", step_);
  backward(gl.total);
  try {
    adam_step(g_->params(), lr, adam());
  } catch (const NumericalError& e) {
    throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step_));
  }
  return gl.report;
}

template <typename T>
void Trainer<T>::run(std::ostream* log, const std::filesystem::path& checkpoint_dir,
                     std::int64_t stop_at) {
  const std::int64_t stop = stop_at < 0 ? config_.steps : std::min(stop_at, config_.steps);
  while (step_ < stop) {
    const LossReport r = step();
    if (log) *log << r.to_json().dump() << '\n' << std::flush;
    if (config_.checkpoint_every > 0 && step_ % config_.checkpoint_every == 0 &&
        !checkpoint_dir.empty())
      save(checkpoint_dir);
  }
  if (!checkpoint_dir.empty()) save(checkpoint_dir);
}

template <typename T>
Tensor<double> predict(const Generator<T>& g, const Tensor<double>& x) {
  NoGradGuard guard;
  const Var<T> in = constant(tensor_cast<T>(x));
  return tensor_cast<double>(g.forward(in).P.value());
}

template <typename T>
MetricReport Trainer<T>::evaluate(const std::vector<PatchPair>& pairs) const {
  MetricReport report;
  for (const auto& p : pairs) {
    const Tensor<double> pred = predict(*g_, p.lr_sdr.data);
    report.add(psnr(p.hr_hdr.data, pred), ssim(p.hr_hdr.data, pred));
  }
  return report;
}

template class Trainer<float>;
template class Trainer<double>;
template Tensor<double> predict<float>(const Generator<float>&, const Tensor<double>&);
template Tensor<double> predict<double>(const Generator<double>&, const Tensor<double>&);

}  // namespace jsi
