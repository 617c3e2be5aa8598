#pragma once
// Data-parallel inner-loop kernels: scalar reference implementations plus
// SIMD variants (AVX2 on x86-64, NEON on aarch64) selected at runtime.
// Every SIMD variant is equivalence-tested against the scalar reference.
//
// Reductions (dot, sum, ...) accumulate in double regardless of element
// type. SIMD reductions reassociate the accumulation, so their results may
// differ from scalar by a few ulps; elementwise kernels and adam_step are
// bitwise-identical across backends.

#include <cstddef>
#include <cstdint>

namespace trajgan::kern {

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);
bool backend_supported(Backend b);

// Active backend, auto-detected on first use. The environment variable
// TRAJGAN_KERNEL_BACKEND (scalar|avx2|neon|auto) overrides detection.
Backend active_backend();

// Returns false and leaves the dispatch table unchanged if `b` is not
// supported on this CPU.
bool set_backend(Backend b);
void reset_backend();

template <typename T>
struct KernelTable {
  void (*add)(const T*, const T*, T*, std::size_t);
  void (*sub)(const T*, const T*, T*, std::size_t);
  void (*mul)(const T*, const T*, T*, std::size_t);
  void (*scale)(const T*, T, T*, std::size_t);
  void (*axpy)(T, const T*, T*, std::size_t);  // y += alpha * x
  double (*dot)(const T*, const T*, std::size_t);
  double (*sum)(const T*, std::size_t);
  double (*sq_dev_sum)(const T*, T, std::size_t);    // sum (a[i] - mu)^2
  double (*l1_diff_sum)(const T*, const T*, std::size_t);
  double (*sq_diff_sum)(const T*, const T*, std::size_t);
  void (*relu)(const T*, T*, std::size_t);
  void (*relu_grad_acc)(const T*, const T*, T*, std::size_t);  // gx += g * (x > 0)
  void (*leaky_relu)(const T*, T, T*, std::size_t);
  void (*leaky_relu_grad_acc)(const T*, T, const T*, T*, std::size_t);
  // Bias-corrected Adam; bc1 = 1 - beta1^t, bc2 = 1 - beta2^t.
  void (*adam_step)(T*, const T*, T*, T*, std::size_t, T lr, T beta1, T beta2,
                    T eps, T bc1, T bc2);
};

namespace detail {
extern const KernelTable<float>* active_f;
extern const KernelTable<double>* active_d;
void ensure_init();
template <typename T> inline const KernelTable<T>* table();
template <> inline const KernelTable<float>* table<float>() {
  ensure_init();
  return active_f;
}
template <> inline const KernelTable<double>* table<double>() {
  ensure_init();
  return active_d;
}
}  // namespace detail

template <typename T>
inline void add(const T* a, const T* b, T* out, std::size_t n) {
  detail::table<T>()->add(a, b, out, n);
}
template <typename T>
inline void sub(const T* a, const T* b, T* out, std::size_t n) {
  detail::table<T>()->sub(a, b, out, n);
}
template <typename T>
inline void mul(const T* a, const T* b, T* out, std::size_t n) {
  detail::table<T>()->mul(a, b, out, n);
}
template <typename T>
inline void scale(const T* a, T c, T* out, std::size_t n) {
  detail::table<T>()->scale(a, c, out, n);
}
template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
  detail::table<T>()->axpy(alpha, x, y, n);
}
template <typename T>
inline double dot(const T* a, const T* b, std::size_t n) {
  return detail::table<T>()->dot(a, b, n);
}
template <typename T>
inline double sum(const T* a, std::size_t n) {
  return detail::table<T>()->sum(a, n);
}
template <typename T>
inline double sq_dev_sum(const T* a, T mu, std::size_t n) {
  return detail::table<T>()->sq_dev_sum(a, mu, n);
}
template <typename T>
inline double l1_diff_sum(const T* a, const T* b, std::size_t n) {
  return detail::table<T>()->l1_diff_sum(a, b, n);
}
template <typename T>
inline double sq_diff_sum(const T* a, const T* b, std::size_t n) {
  return detail::table<T>()->sq_diff_sum(a, b, n);
}
template <typename T>
inline void relu(const T* x, T* out, std::size_t n) {
  detail::table<T>()->relu(x, out, n);
}
template <typename T>
inline void relu_grad_acc(const T* x, const T* g, T* gx, std::size_t n) {
  detail::table<T>()->relu_grad_acc(x, g, gx, n);
}
template <typename T>
inline void leaky_relu(const T* x, T slope, T* out, std::size_t n) {
  detail::table<T>()->leaky_relu(x, slope, out, n);
}
template <typename T>
inline void leaky_relu_grad_acc(const T* x, T slope, const T* g, T* gx,
                                std::size_t n) {
  detail::table<T>()->leaky_relu_grad_acc(x, slope, g, gx, n);
}
template <typename T>
inline void adam_step(T* p, const T* g, T* m, T* v, std::size_t n, T lr,
                      T beta1, T beta2, T eps, T bc1, T bc2) {
  detail::table<T>()->adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
}

// Defined by each backend translation unit.
const KernelTable<float>& scalar_table_f();
const KernelTable<double>& scalar_table_d();
const KernelTable<float>* avx2_table_f();    // nullptr if not compiled in
const KernelTable<double>* avx2_table_d();
const KernelTable<float>* neon_table_f();
const KernelTable<double>* neon_table_d();

}  // namespace trajgan::kern
