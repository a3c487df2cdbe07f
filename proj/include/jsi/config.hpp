#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "jsi/discriminator.hpp"
#include "jsi/jsinet.hpp"
#include "jsi/losses.hpp"
#include "jsi/schedule.hpp"

namespace jsi {

/// Flat `key = value` text; '#' starts a comment. Later keys win.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text, const std::string& origin = "config");
KeyValues read_key_values(const std::filesystem::path& path);

struct TrainConfig {
  int scale = 4;
  int batch = 4;
  std::uint64_t seed = 1;
  std::int64_t steps = 200;
  double steps_per_epoch = 0;  // 0: steps / total epochs of the phase
  double lr = 0;               // 0: phase default
  double grad_clip = 0;        // 0: disabled
  std::int64_t checkpoint_every = 0;  // 0: only at the end
  LossWeights weights;
  int features = 64;
  DecompositionMode decomposition = DecompositionMode::division;
  GuidedFilterParams guided;
  int disc_channels = 32;
  int disc_fc_width = 512;
  bool disc_final_bn = true;
  std::string precision = "float";  // float | double

  /// Applies one key; throws std::invalid_argument on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
  KeyValues to_key_values() const;
  /// Canonical text form (sorted keys), used for hashing.
  std::string to_text() const;
  void validate() const;

  GeneratorConfig generator() const;
  /// Discriminator sized for the HR patch side.
  DiscriminatorConfig discriminator(int hr_side) const;
  Schedule schedule(Phase phase) const;
  double effective_steps_per_epoch(Phase phase) const;
};

}  // namespace jsi
