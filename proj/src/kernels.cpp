#include "tse/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace tse::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Backend detect() { return avx2_available() ? Backend::avx2 : Backend::scalar; }

std::atomic<Backend> g_backend{detect()};

}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_available())
    throw std::runtime_error("kernels: avx2 backend not supported on this cpu");
  g_backend.store(b, std::memory_order_relaxed);
}

const Ops& ops() {
  return active_backend() == Backend::avx2 ? avx2_ops() : scalar_ops();
}

}  // namespace tse::kernels
