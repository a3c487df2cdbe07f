#pragma once

#include <cstdint>
#include <vector>

#include "jsi/dynfilter.hpp"
#include "jsi/guided_filter.hpp"
#include "jsi/layers.hpp"

namespace jsi {

struct GeneratorConfig {
  int scale = 2;
  int features = 64;
  int trunk_blocks = 4;    // per DR / LCE trunk
  int ir_head_blocks = 1;
  int ir_tail_blocks = 3;
  int dr_taps = kernels::kSeparableTaps;
  int lce_kernel = kernels::kLocalKernel;
  DecompositionMode mode = DecompositionMode::division;
  GuidedFilterParams guided;

  /// Throws std::invalid_argument on an unsupported combination.
  void validate() const;
};

template <typename T>
struct GeneratorOutput {
  Var<T> P;    // (I + D) * C_l
  Var<T> I;    // IR subnet output
  Var<T> D;    // dynamically up-sampled detail layer
  Var<T> C_l;  // contrast mask in (0, 2)
  SeparableFilterField<T> dr_filters;
  LocalFilterField2D<T> lce_filters;
  Decomposition<T> input;
  Var<T> i_dr;
};

template <typename T>
struct ResBlock {
  Conv<T> conv1, conv2;
  /// conv2(relu(conv1(relu(x)))) + x
  Var<T> operator()(const Var<T>& x) const;
};

template <typename T>
class Generator {
 public:
  Generator(const GeneratorConfig& config, std::uint64_t seed);
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  GeneratorOutput<T> forward(const Var<T>& x) const;

  /// Returns (filter field, i_DR) for the detail layer.
  std::pair<SeparableFilterField<T>, Var<T>> dr_subnet(const Var<T>& x_detail) const;
  /// Contrast mask and its filter field for the base layer.
  std::pair<Var<T>, LocalFilterField2D<T>> lce_subnet(const Var<T>& x_base) const;
  Var<T> ir_subnet(const Var<T>& x, const Var<T>& i_dr) const;

  ParameterStore<T>& params() { return store_; }
  const ParameterStore<T>& params() const { return store_; }
  const GeneratorConfig& config() const { return config_; }
  std::size_t param_count() const { return store_.count(); }

 private:
  GeneratorConfig config_;
  ParameterStore<T> store_;
  Conv<T> dr_in_, dr_head_v_, dr_head_h_;
  std::vector<ResBlock<T>> dr_blocks_;
  Conv<T> lce_in_, lce_head_;
  std::vector<ResBlock<T>> lce_blocks_;
  Conv<T> ir_in_, ir_reduce_, ir_up_, ir_out_;
  std::vector<ResBlock<T>> ir_head_blocks_, ir_tail_blocks_;
};

/// Analytic parameter count of the configured generator (no allocation).
std::size_t param_count(const GeneratorConfig& config);

}  // namespace jsi
