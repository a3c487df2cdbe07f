#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>

#include "jsi/tensor.hpp"

namespace jsi {

// On-disk layout, all little-endian:
//   char[4] "JSIT" | u32 version | u32 n | u32 c | u32 h | u32 w | f32 data[n*c*h*w]
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 24;

template <typename T>
void write_snapshot(std::ostream& out, const Tensor<T>& t);
template <typename T>
Tensor<T> read_snapshot(std::istream& in);

/// File variants; read errors name the offending path.
template <typename T>
void save_snapshot(const std::filesystem::path& path, const Tensor<T>& t);
template <typename T>
Tensor<T> load_snapshot(const std::filesystem::path& path);

}  // namespace jsi
