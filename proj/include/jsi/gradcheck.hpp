#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jsi/autograd.hpp"

namespace jsi {

struct GradcheckOptions {
  double rel_tol = 1e-4;
  double abs_floor = 1e-8;
  double step = 1e-5;            // h = step * max(1, |x|)
  std::size_t max_coords = 0;    // per input tensor; 0 checks every coordinate
  std::uint64_t seed = 1;
};

struct GradcheckResult {
  std::string name;
  std::size_t checked = 0;
  std::size_t failures = 0;
  double max_abs_err = 0;
  double max_rel_err = 0;  // over coordinates that missed the absolute floor
  std::string worst;       // description of the worst coordinate
  bool passed() const { return failures == 0 && checked > 0; }
};

using GradFunction = std::function<Var<double>(const std::vector<Var<double>>&)>;

/// Compares reverse-mode gradients of sum(R * f(inputs)) (R fixed random)
/// with central differences. A coordinate passes when |a - n| < abs_floor
/// or |a - n| / max(|a|, |n|) < rel_tol.
GradcheckResult gradcheck(const std::string& name, const GradFunction& f,
                          std::vector<Tensor<double>> inputs, const GradcheckOptions& opt = {});

/// Same check over existing leaves (for example network parameters); `f`
/// is re-evaluated after each in-place perturbation.
GradcheckResult gradcheck_leaves(const std::string& name, const std::function<Var<double>()>& f,
                                 std::vector<Var<double>> leaves, const GradcheckOptions& opt = {});

struct GradcheckCase {
  std::string name;
  std::function<GradcheckResult()> run;
};

/// Every differentiable building block, the losses, the generator and the
/// discriminator, each on small random inputs.
std::vector<GradcheckCase> gradcheck_suite();

}  // namespace jsi
