// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86; avx2_table_impl() returns nullptr elsewhere.

#include "vrm/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace vrm::kernels {
namespace {

inline double hsum4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    }
    double s = hsum4(acc);
    for (; i < n; ++i) {
        s += a[i];
    }
    return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void scale_avx2(double a, const double* x, double* out, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) {
        out[i] = a * x[i];
    }
}

void add_avx2(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] + y[i];
    }
}

void sub_avx2(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] - y[i];
    }
}

void mul_avx2(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] * y[i];
    }
}

void matvec_avx2(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
    std::size_t r = 0;
    // two rows at a time share the loads of x
    for (; r + 2 <= rows; r += 2) {
        const double* w0 = w + r * cols;
        const double* w1 = w0 + cols;
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            __m256d vx = _mm256_loadu_pd(x + i);
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + i), vx, acc0);
            acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + i), vx, acc1);
        }
        double s0 = hsum4(acc0);
        double s1 = hsum4(acc1);
        for (; i < cols; ++i) {
            s0 += w0[i] * x[i];
            s1 += w1[i] * x[i];
        }
        y[r] = s0;
        y[r + 1] = s1;
    }
    for (; r < rows; ++r) {
        y[r] = dot_avx2(w + r * cols, x, cols);
    }
}

void matvec_t_acc_avx2(const double* w, std::size_t rows, std::size_t cols,
                       const double* g, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        axpy_avx2(g[r], w + r * cols, out, cols);
    }
}

void ger_acc_avx2(double* w, std::size_t rows, std::size_t cols,
                  const double* g, const double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        axpy_avx2(g[r], x, w + r * cols, cols);
    }
}

const Table avx2_table{
    dot_avx2,   sum_avx2, axpy_avx2,   scale_avx2,
    add_avx2,   sub_avx2, mul_avx2,    matvec_avx2,
    matvec_t_acc_avx2,    ger_acc_avx2,
};

}  // namespace

const Table* avx2_table_impl() { return &avx2_table; }

}  // namespace vrm::kernels

#else

namespace vrm::kernels {
const Table* avx2_table_impl() { return nullptr; }
}  // namespace vrm::kernels

#endif
