#include <cmath>

#include "trajgan/kernels.hpp"

namespace trajgan::kern {
namespace {

template <typename T>
void add_(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void sub_(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void mul_(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void scale_(const T* a, T c, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * c;
}

template <typename T>
void axpy_(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
double dot_(const T* a, const T* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}

template <typename T>
double sum_(const T* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += double(a[i]);
  return acc;
}

template <typename T>
double sq_dev_sum_(const T* a, T mu, std::size_t n) {
  double acc = 0.0;
  const double m = double(mu);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = double(a[i]) - m;
    acc += d * d;
  }
  return acc;
}

template <typename T>
double l1_diff_sum_(const T* a, const T* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += std::abs(double(a[i]) - double(b[i]));
  return acc;
}

template <typename T>
double sq_diff_sum_(const T* a, const T* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc;
}

template <typename T>
void relu_(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_grad_acc_(const T* x, const T* g, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > T(0)) gx[i] += g[i];
}

template <typename T>
void leaky_relu_(const T* x, T slope, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_grad_acc_(const T* x, T slope, const T* g, T* gx,
                          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > T(0) ? g[i] : slope * g[i];
}

template <typename T>
void adam_step_(T* p, const T* g, T* m, T* v, std::size_t n, T lr, T beta1,
                T beta2, T eps, T bc1, T bc2) {
  const T om1 = T(1) - beta1;
  const T om2 = T(1) - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + om1 * g[i];
    v[i] = beta2 * v[i] + om2 * (g[i] * g[i]);
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template <typename T>
constexpr KernelTable<T> make_table() {
  return KernelTable<T>{add_<T>,
                        sub_<T>,
                        mul_<T>,
                        scale_<T>,
                        axpy_<T>,
                        dot_<T>,
                        sum_<T>,
                        sq_dev_sum_<T>,
                        l1_diff_sum_<T>,
                        sq_diff_sum_<T>,
                        relu_<T>,
                        relu_grad_acc_<T>,
                        leaky_relu_<T>,
                        leaky_relu_grad_acc_<T>,
                        adam_step_<T>};
}

const KernelTable<float> table_f = make_table<float>();
const KernelTable<double> table_d = make_table<double>();

}  // namespace

const KernelTable<float>& scalar_table_f() { return table_f; }
const KernelTable<double>& scalar_table_d() { return table_d; }

}  // namespace trajgan::kern
