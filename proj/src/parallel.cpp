#include "jsi/parallel.hpp"

#include <Eigen/Core>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jsi {
namespace {
int g_threads = -1;  // library default until configured
}

void set_num_threads(int threads) {
  g_threads = threads < 0 ? 0 : threads;
  const int effective = g_threads == 0 ? 1 : g_threads;
#ifdef _OPENMP
  omp_set_num_threads(effective);
#endif
  Eigen::setNbThreads(effective);
}

int num_threads() { return g_threads; }

int configure_threads_from_env() {
  if (const char* env = std::getenv("JSI_THREADS")) {
    try {
      set_num_threads(std::stoi(env));
    } catch (const std::exception&) {
      set_num_threads(0);
    }
  }
  return g_threads;
}

}  // namespace jsi
