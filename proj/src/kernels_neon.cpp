// NEON kernel variants for aarch64 (float64x2, 2 lanes). Returns nullptr
// when not built for ARM.

#include "vrm/kernels.hpp"

#if defined(__aarch64__) || defined(__ARM_NEON)

#include <arm_neon.h>

namespace vrm::kernels {
namespace {

inline double hsum2(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double s = hsum2(acc);
    for (; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double sum_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vaddq_f64(acc, vld1q_f64(a + i));
    }
    double s = hsum2(acc);
    for (; i < n; ++i) {
        s += a[i];
    }
    return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void scale_neon(double a, const double* x, double* out, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vmulq_f64(va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) {
        out[i] = a * x[i];
    }
}

void add_neon(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] + y[i];
    }
}

void sub_neon(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] - y[i];
    }
}

void mul_neon(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] * y[i];
    }
}

void matvec_neon(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_neon(w + r * cols, x, cols);
    }
}

void matvec_t_acc_neon(const double* w, std::size_t rows, std::size_t cols,
                       const double* g, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        axpy_neon(g[r], w + r * cols, out, cols);
    }
}

void ger_acc_neon(double* w, std::size_t rows, std::size_t cols,
                  const double* g, const double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        axpy_neon(g[r], x, w + r * cols, cols);
    }
}

const Table neon_table{
    dot_neon,   sum_neon, axpy_neon,   scale_neon,
    add_neon,   sub_neon, mul_neon,    matvec_neon,
    matvec_t_acc_neon,    ger_acc_neon,
};

}  // namespace

const Table* neon_table_impl() { return &neon_table; }

}  // namespace vrm::kernels

#else

namespace vrm::kernels {
const Table* neon_table_impl() { return nullptr; }
}  // namespace vrm::kernels

#endif
