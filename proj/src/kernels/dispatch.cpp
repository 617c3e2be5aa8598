#include <cstdlib>
#include <cstring>

#include "trajgan/kernels.hpp"

namespace trajgan::kern {
namespace {

Backend g_backend = Backend::scalar;
bool g_initialized = false;

Backend detect() {
  const char* env = std::getenv("TRAJGAN_KERNEL_BACKEND");
  if (env && std::strcmp(env, "auto") != 0) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && backend_supported(Backend::avx2))
      return Backend::avx2;
    if (std::strcmp(env, "neon") == 0 && backend_supported(Backend::neon))
      return Backend::neon;
    return Backend::scalar;
  }
  if (backend_supported(Backend::avx2)) return Backend::avx2;
  if (backend_supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

void install(Backend b) {
  switch (b) {
    case Backend::avx2:
      detail::active_f = avx2_table_f();
      detail::active_d = avx2_table_d();
      break;
    case Backend::neon:
      detail::active_f = neon_table_f();
      detail::active_d = neon_table_d();
      break;
    default:
      detail::active_f = &scalar_table_f();
      detail::active_d = &scalar_table_d();
      break;
  }
  g_backend = b;
  g_initialized = true;
}

}  // namespace

namespace detail {
const KernelTable<float>* active_f = nullptr;
const KernelTable<double>* active_d = nullptr;
void ensure_init() {
  if (!g_initialized) install(detect());
}
}  // namespace detail

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
    default:
      return "scalar";
  }
}

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return avx2_table_f() != nullptr && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::neon:
      return neon_table_f() != nullptr;
  }
  return false;
}

Backend active_backend() {
  detail::ensure_init();
  return g_backend;
}

bool set_backend(Backend b) {
  if (!backend_supported(b)) return false;
  install(b);
  return true;
}

void reset_backend() { install(detect()); }

}  // namespace trajgan::kern
