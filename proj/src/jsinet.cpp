#include "jsi/jsinet.hpp"

#include <stdexcept>
#include <string>

namespace jsi {
namespace {

template <typename T>
ResBlock<T> make_block(ParameterStore<T>& store, Rng& rng, const std::string& name, int width) {
  return ResBlock<T>{make_conv(store, rng, name + ".conv1", width, width, 3),
                     make_conv(store, rng, name + ".conv2", width, width, 3)};
}

template <typename T>
std::vector<ResBlock<T>> make_blocks(ParameterStore<T>& store, Rng& rng,
                                     const std::string& prefix, int count, int width) {
  std::vector<ResBlock<T>> blocks;
  for (int i = 1; i <= count; ++i)
    blocks.push_back(make_block(store, rng, prefix + ".rb" + std::to_string(i), width));
  return blocks;
}

template <typename T>
Var<T> run_blocks(const std::vector<ResBlock<T>>& blocks, Var<T> x) {
  for (const auto& b : blocks) x = b(x);
  return x;
}

std::size_t conv_count(std::size_t c_in, std::size_t c_out, std::size_t k) {
  return c_out * c_in * k * k + c_out;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (scale != 2 && scale != 4)
    throw std::invalid_argument("generator scale must be 2 or 4, got " + std::to_string(scale));
  if (features < 1 || trunk_blocks < 0 || ir_head_blocks < 0 || ir_tail_blocks < 0)
    throw std::invalid_argument("generator widths and block counts must be positive");
  if (dr_taps != kernels::kSeparableTaps || lce_kernel != kernels::kLocalKernel)
    throw std::invalid_argument("dynamic filter sizes are fixed at 41 taps and 9x9");
}

template <typename T>
Var<T> ResBlock<T>::operator()(const Var<T>& x) const {
  if (x.shape().c != conv1.weight.shape().c)
    throw std::invalid_argument("res_block: input " + x.shape().str() + " does not match width " +
                                std::to_string(conv1.weight.shape().c));
  return add(conv2(relu(conv1(relu(x)))), x);
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int f = config_.features, s2 = config_.scale * config_.scale;
  dr_in_ = make_conv(store_, rng, "dr.trunk.conv_in", 3, f, 3);
  dr_blocks_ = make_blocks(store_, rng, "dr.trunk", config_.trunk_blocks, f);
  dr_head_v_ = make_conv(store_, rng, "dr.head_v", f, config_.dr_taps * s2, 3);
  dr_head_h_ = make_conv(store_, rng, "dr.head_h", f, config_.dr_taps * s2, 3);

  lce_in_ = make_conv(store_, rng, "lce.trunk.conv_in", 3, f, 3);
  lce_blocks_ = make_blocks(store_, rng, "lce.trunk", config_.trunk_blocks, f);
  lce_head_ = make_conv(store_, rng, "lce.head", f, config_.lce_kernel * config_.lce_kernel * s2, 3);

  ir_in_ = make_conv(store_, rng, "ir.conv_in", 3, f, 3);
  ir_head_blocks_ = make_blocks(store_, rng, "ir.head", config_.ir_head_blocks, f);
  ir_reduce_ = make_conv(store_, rng, "ir.reduce", 2 * f, f, 3);
  ir_tail_blocks_ = make_blocks(store_, rng, "ir.tail", config_.ir_tail_blocks, f);
  ir_up_ = make_conv(store_, rng, "ir.up", f, f * s2, 3);
  ir_out_ = make_conv(store_, rng, "ir.conv_out", f, 3, 3);
}

template <typename T>
std::pair<SeparableFilterField<T>, Var<T>> Generator<T>::dr_subnet(const Var<T>& x_detail) const {
  Var<T> trunk = relu(run_blocks(dr_blocks_, dr_in_(x_detail)));
  SeparableFilterField<T> field{dr_head_v_(trunk), dr_head_h_(trunk), config_.scale};
  return {field, trunk};
}

template <typename T>
std::pair<Var<T>, LocalFilterField2D<T>> Generator<T>::lce_subnet(const Var<T>& x_base) const {
  Var<T> trunk = relu(run_blocks(lce_blocks_, lce_in_(x_base)));
  LocalFilterField2D<T> field{lce_head_(trunk), config_.scale};
  Var<T> mask = scale(sigmoid(dynamic_2d_upsample(x_base, field)), T(2));
  return {mask, field};
}

template <typename T>
Var<T> Generator<T>::ir_subnet(const Var<T>& x, const Var<T>& i_dr) const {
  Var<T> i_ir = run_blocks(ir_head_blocks_, ir_in_(x));
  if (i_dr.shape().c != config_.features || i_dr.shape().h != i_ir.shape().h ||
      i_dr.shape().w != i_ir.shape().w || i_dr.shape().n != i_ir.shape().n)
    throw std::invalid_argument("ir_subnet: i_DR " + i_dr.shape().str() +
                                " does not match IR features " + i_ir.shape().str());
  Var<T> h = ir_reduce_(concat_channels(i_ir, i_dr));
  h = relu(run_blocks(ir_tail_blocks_, h));
  h = relu(ir_up_(h));
  return ir_out_(pixel_shuffle(h, config_.scale));
}

template <typename T>
GeneratorOutput<T> Generator<T>::forward(const Var<T>& x) const {
  if (x.shape().c != 3)
    throw std::invalid_argument("generator input must have 3 channels, got " + x.shape().str());
  GeneratorOutput<T> out;
  out.input = decompose(x, config_.mode, config_.guided);
  auto [dr_field, i_dr] = dr_subnet(out.input.detail);
  out.dr_filters = dr_field;
  out.i_dr = i_dr;
  out.D = dynamic_separable_upsample(out.input.detail, dr_field);
  auto [mask, lce_field] = lce_subnet(out.input.base);
  out.C_l = mask;
  out.lce_filters = lce_field;
  out.I = ir_subnet(x, i_dr);
  out.P = mul(add(out.I, out.D), out.C_l);
  return out;
}

std::size_t param_count(const GeneratorConfig& c) {
  c.validate();
  const std::size_t f = c.features, s2 = static_cast<std::size_t>(c.scale) * c.scale;
  const std::size_t block = 2 * conv_count(f, f, 3);
  const std::size_t trunk = conv_count(3, f, 3) + c.trunk_blocks * block;
  const std::size_t dr = trunk + 2 * conv_count(f, c.dr_taps * s2, 3);
  const std::size_t lce = trunk + conv_count(f, c.lce_kernel * c.lce_kernel * s2, 3);
  const std::size_t ir = conv_count(3, f, 3) + c.ir_head_blocks * block + conv_count(2 * f, f, 3) +
                         c.ir_tail_blocks * block + conv_count(f, f * s2, 3) + conv_count(f, 3, 3);
  return dr + lce + ir;
}

template struct ResBlock<float>;
template struct ResBlock<double>;
template class Generator<float>;
template class Generator<double>;

}  // namespace jsi
