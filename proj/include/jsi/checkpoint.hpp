#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jsi/parameter.hpp"

namespace jsi {

/// Checkpoint directory layout:
///   manifest.json              phase, step, seed, config, file index
///   <param>.jsit               value snapshot per named parameter
///   <param>.adam_m.jsit / .adam_v.jsit   optimizer moments
///   <buffer>.jsit              batch-norm statistics, spectral-norm vectors
/// Snapshots store float32, so a resumed run is bit-identical only when
/// training runs in float32.
struct CheckpointInfo {
  std::string phase;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  nlohmann::json config;  // key/value object
};

template <typename T>
struct NamedStore {
  std::string group;  // "generator", "d1", "d2"
  ParameterStore<T>* store = nullptr;
};

/// Writes into a sibling temporary directory and renames it over `dir`, so
/// an existing checkpoint is only replaced by a complete one.
template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const CheckpointInfo& info,
                     const std::vector<NamedStore<T>>& stores);

CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir);

/// Loads every listed group. Groups absent from the checkpoint are an error
/// unless `optional_groups` names them. With `with_optimizer` false the
/// Adam moments and step counters are reset.
template <typename T>
CheckpointInfo load_checkpoint(const std::filesystem::path& dir,
                               const std::vector<NamedStore<T>>& stores, bool with_optimizer,
                               const std::vector<std::string>& optional_groups = {});

}  // namespace jsi
