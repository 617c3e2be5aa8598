// NEON kernel variants for aarch64; stubs on other targets. Mirrors the
// AVX2 translation unit: elementwise kernels match the scalar reference
// bitwise, reductions accumulate double lanes and agree up to rounding.

#include "trajgan/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace trajgan::kern {
namespace {

// ---- float ----

void add_f(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_f(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_f(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_f(const float* a, float c, float* out, std::size_t n) {
  const float32x4_t vc = vdupq_n_f32(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vc));
  for (; i < n; ++i) out[i] = a[i] * c;
}

void axpy_f(float alpha, const float* x, float* y, std::size_t n) {
  const float32x4_t va = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t prod = vmulq_f32(va, vld1q_f32(x + i));
    vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_f(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t va = vld1q_f32(a + i);
    float32x4_t vb = vld1q_f32(b + i);
    float64x2_t alo = vcvt_f64_f32(vget_low_f32(va));
    float64x2_t blo = vcvt_f64_f32(vget_low_f32(vb));
    float64x2_t ahi = vcvt_high_f64_f32(va);
    float64x2_t bhi = vcvt_high_f64_f32(vb);
    acc0 = vaddq_f64(acc0, vmulq_f64(alo, blo));
    acc1 = vaddq_f64(acc1, vmulq_f64(ahi, bhi));
  }
  double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}

double sum_f(const float* a, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t va = vld1q_f32(a + i);
    acc0 = vaddq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)));
    acc1 = vaddq_f64(acc1, vcvt_high_f64_f32(va));
  }
  double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) acc += double(a[i]);
  return acc;
}

double sq_dev_sum_f(const float* a, float mu, std::size_t n) {
  const float64x2_t vmu = vdupq_n_f64(double(mu));
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t va = vld1q_f32(a + i);
    float64x2_t dlo = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)), vmu);
    float64x2_t dhi = vsubq_f64(vcvt_high_f64_f32(va), vmu);
    acc0 = vaddq_f64(acc0, vmulq_f64(dlo, dlo));
    acc1 = vaddq_f64(acc1, vmulq_f64(dhi, dhi));
  }
  double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  const double m = double(mu);
  for (; i < n; ++i) {
    const double d = double(a[i]) - m;
    acc += d * d;
  }
  return acc;
}

double l1_diff_sum_f(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t va = vld1q_f32(a + i);
    float32x4_t vb = vld1q_f32(b + i);
    float64x2_t dlo =
        vsubq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
    float64x2_t dhi = vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    acc0 = vaddq_f64(acc0, vabsq_f64(dlo));
    acc1 = vaddq_f64(acc1, vabsq_f64(dhi));
  }
  double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) acc += std::abs(double(a[i]) - double(b[i]));
  return acc;
}

double sq_diff_sum_f(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t va = vld1q_f32(a + i);
    float32x4_t vb = vld1q_f32(b + i);
    float64x2_t dlo =
        vsubq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
    float64x2_t dhi = vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    acc0 = vaddq_f64(acc0, vmulq_f64(dlo, dlo));
    acc1 = vaddq_f64(acc1, vmulq_f64(dhi, dhi));
  }
  double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) {
    const double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc;
}

void relu_f(const float* x, float* out, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vmaxq_f32(vld1q_f32(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_grad_acc_f(const float* x, const float* g, float* gx,
                     std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    uint32x4_t m = vcgtq_f32(vld1q_f32(x + i), zero);
    float32x4_t gi = vreinterpretq_f32_u32(
        vandq_u32(vreinterpretq_u32_f32(vld1q_f32(g + i)), m));
    vst1q_f32(gx + i, vaddq_f32(vld1q_f32(gx + i), gi));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) gx[i] += g[i];
}

void leaky_relu_f(const float* x, float slope, float* out, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  const float32x4_t vs = vdupq_n_f32(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t v = vld1q_f32(x + i);
    uint32x4_t m = vcgtq_f32(v, zero);
    vst1q_f32(out + i, vbslq_f32(m, v, vmulq_f32(vs, v)));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void leaky_relu_grad_acc_f(const float* x, float slope, const float* g,
                           float* gx, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  const float32x4_t vs = vdupq_n_f32(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    uint32x4_t m = vcgtq_f32(vld1q_f32(x + i), zero);
    float32x4_t gi = vld1q_f32(g + i);
    float32x4_t contrib = vbslq_f32(m, gi, vmulq_f32(vs, gi));
    vst1q_f32(gx + i, vaddq_f32(vld1q_f32(gx + i), contrib));
  }
  for (; i < n; ++i) gx[i] += x[i] > 0.0f ? g[i] : slope * g[i];
}

void adam_step_f(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps, float bc1,
                 float bc2) {
  const float32x4_t vb1 = vdupq_n_f32(beta1);
  const float32x4_t vb2 = vdupq_n_f32(beta2);
  const float32x4_t vo1 = vdupq_n_f32(1.0f - beta1);
  const float32x4_t vo2 = vdupq_n_f32(1.0f - beta2);
  const float32x4_t vlr = vdupq_n_f32(lr);
  const float32x4_t veps = vdupq_n_f32(eps);
  const float32x4_t vc1 = vdupq_n_f32(bc1);
  const float32x4_t vc2 = vdupq_n_f32(bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t gi = vld1q_f32(g + i);
    float32x4_t mi =
        vaddq_f32(vmulq_f32(vb1, vld1q_f32(m + i)), vmulq_f32(vo1, gi));
    float32x4_t vi = vaddq_f32(vmulq_f32(vb2, vld1q_f32(v + i)),
                               vmulq_f32(vo2, vmulq_f32(gi, gi)));
    vst1q_f32(m + i, mi);
    vst1q_f32(v + i, vi);
    float32x4_t mhat = vdivq_f32(mi, vc1);
    float32x4_t vhat = vdivq_f32(vi, vc2);
    float32x4_t upd =
        vdivq_f32(vmulq_f32(vlr, mhat), vaddq_f32(vsqrtq_f32(vhat), veps));
    vst1q_f32(p + i, vsubq_f32(vld1q_f32(p + i), upd));
  }
  const float om1 = 1.0f - beta1;
  const float om2 = 1.0f - beta2;
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + om1 * g[i];
    v[i] = beta2 * v[i] + om2 * (g[i] * g[i]);
    const float mhat = m[i] / bc1;
    const float vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

// ---- double ----

void add_d(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_d(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_d(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_d(const double* a, double c, double* out, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vc));
  for (; i < n; ++i) out[i] = a[i] * c;
}

void axpy_d(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_d(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc1 =
        vaddq_f64(acc1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  for (; i + 2 <= n; i += 2)
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_d(const double* a, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc0 = vaddq_f64(acc0, vld1q_f64(a + i));
  double acc = vaddvq_f64(acc0);
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double sq_dev_sum_d(const double* a, double mu, std::size_t n) {
  const float64x2_t vmu = vdupq_n_f64(mu);
  float64x2_t acc0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a + i), vmu);
    acc0 = vaddq_f64(acc0, vmulq_f64(d, d));
  }
  double acc = vaddvq_f64(acc0);
  for (; i < n; ++i) {
    const double d = a[i] - mu;
    acc += d * d;
  }
  return acc;
}

double l1_diff_sum_d(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc0 = vaddq_f64(acc0, vabsq_f64(d));
  }
  double acc = vaddvq_f64(acc0);
  for (; i < n; ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

double sq_diff_sum_d(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc0 = vaddq_f64(acc0, vmulq_f64(d, d));
  }
  double acc = vaddvq_f64(acc0);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void relu_d(const double* x, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmaxq_f64(vld1q_f64(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_acc_d(const double* x, const double* g, double* gx,
                     std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t m = vcgtq_f64(vld1q_f64(x + i), zero);
    float64x2_t gi = vreinterpretq_f64_u64(
        vandq_u64(vreinterpretq_u64_f64(vld1q_f64(g + i)), m));
    vst1q_f64(gx + i, vaddq_f64(vld1q_f64(gx + i), gi));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) gx[i] += g[i];
}

void leaky_relu_d(const double* x, double slope, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t vs = vdupq_n_f64(slope);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    uint64x2_t m = vcgtq_f64(v, zero);
    vst1q_f64(out + i, vbslq_f64(m, v, vmulq_f64(vs, v)));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_grad_acc_d(const double* x, double slope, const double* g,
                           double* gx, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t vs = vdupq_n_f64(slope);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t m = vcgtq_f64(vld1q_f64(x + i), zero);
    float64x2_t gi = vld1q_f64(g + i);
    float64x2_t contrib = vbslq_f64(m, gi, vmulq_f64(vs, gi));
    vst1q_f64(gx + i, vaddq_f64(vld1q_f64(gx + i), contrib));
  }
  for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
}

void adam_step_d(double* p, const double* g, double* m, double* v,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
  const float64x2_t vb1 = vdupq_n_f64(beta1);
  const float64x2_t vb2 = vdupq_n_f64(beta2);
  const float64x2_t vo1 = vdupq_n_f64(1.0 - beta1);
  const float64x2_t vo2 = vdupq_n_f64(1.0 - beta2);
  const float64x2_t vlr = vdupq_n_f64(lr);
  const float64x2_t veps = vdupq_n_f64(eps);
  const float64x2_t vc1 = vdupq_n_f64(bc1);
  const float64x2_t vc2 = vdupq_n_f64(bc2);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t gi = vld1q_f64(g + i);
    float64x2_t mi =
        vaddq_f64(vmulq_f64(vb1, vld1q_f64(m + i)), vmulq_f64(vo1, gi));
    float64x2_t vi = vaddq_f64(vmulq_f64(vb2, vld1q_f64(v + i)),
                               vmulq_f64(vo2, vmulq_f64(gi, gi)));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    float64x2_t mhat = vdivq_f64(mi, vc1);
    float64x2_t vhat = vdivq_f64(vi, vc2);
    float64x2_t upd =
        vdivq_f64(vmulq_f64(vlr, mhat), vaddq_f64(vsqrtq_f64(vhat), veps));
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), upd));
  }
  const double om1 = 1.0 - beta1;
  const double om2 = 1.0 - beta2;
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + om1 * g[i];
    v[i] = beta2 * v[i] + om2 * (g[i] * g[i]);
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

const KernelTable<float> table_f = {
    add_f,          sub_f,        mul_f,
    scale_f,        axpy_f,       dot_f,
    sum_f,          sq_dev_sum_f, l1_diff_sum_f,
    sq_diff_sum_f,  relu_f,       relu_grad_acc_f,
    leaky_relu_f,   leaky_relu_grad_acc_f,          adam_step_f};

const KernelTable<double> table_d = {
    add_d,          sub_d,        mul_d,
    scale_d,        axpy_d,       dot_d,
    sum_d,          sq_dev_sum_d, l1_diff_sum_d,
    sq_diff_sum_d,  relu_d,       relu_grad_acc_d,
    leaky_relu_d,   leaky_relu_grad_acc_d,          adam_step_d};

}  // namespace

const KernelTable<float>* neon_table_f() { return &table_f; }
const KernelTable<double>* neon_table_d() { return &table_d; }

}  // namespace trajgan::kern

#else

namespace trajgan::kern {
const KernelTable<float>* neon_table_f() { return nullptr; }
const KernelTable<double>* neon_table_d() { return nullptr; }
}  // namespace trajgan::kern

#endif
