#pragma once

namespace jsi {

/// Worker-thread cap for OpenMP loops and Eigen GEMMs.
/// 0 selects sequential mode, which is the bit-reproducible configuration.
void set_num_threads(int threads);
/// -1 until configured (OpenMP/Eigen defaults apply).
int num_threads();

/// Applies JSI_THREADS from the environment when set; returns the cap in effect.
int configure_threads_from_env();

}  // namespace jsi
