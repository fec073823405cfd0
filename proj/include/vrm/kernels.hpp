// Dense double-precision kernels used by the tape's inner loops.
//
// Scalar reference implementations are always available; an AVX2+FMA
// variant (x86) and a NEON variant (aarch64) are selected at runtime.
// SIMD variants may reassociate sums, so results agree with the scalar
// reference to rounding, not bitwise; the equivalence tests pin that.

#pragma once

#include <cstddef>

namespace vrm::kernels {

enum class Backend {
    Scalar,
    Avx2,
    Neon,
};

struct Table {
    // y = sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_i a[i]
    double (*sum)(const double* a, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // out[i] = a * x[i]
    void (*scale)(double a, const double* x, double* out, std::size_t n);
    void (*add)(const double* x, const double* y, double* out, std::size_t n);
    void (*sub)(const double* x, const double* y, double* out, std::size_t n);
    void (*mul)(const double* x, const double* y, double* out, std::size_t n);
    // row-major W (rows x cols): y = W x
    void (*matvec)(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, double* y);
    // out += W^T g (length cols)
    void (*matvec_t_acc)(const double* w, std::size_t rows, std::size_t cols,
                         const double* g, double* out);
    // W += g x^T (rank-1 accumulate)
    void (*ger_acc)(double* w, std::size_t rows, std::size_t cols,
                    const double* g, const double* x);
};

// Reference table, always present.
const Table& scalar_table();

// Table for the given backend, or nullptr if not compiled in / not
// supported by this CPU.
const Table* backend_table(Backend b);

// Active table. Picked once at first use: best supported backend unless
// the VRM_KERNELS environment variable ("scalar", "avx2", "neon") or
// force_backend() overrides it.
const Table& active();

// Override the active backend (tests, benchmarking). Throws
// std::invalid_argument if the backend is unavailable on this machine.
void force_backend(Backend b);

Backend active_backend();
const char* backend_name(Backend b);

// Convenience forwarders through the active table.
inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline double sum(const double* a, std::size_t n) { return active().sum(a, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void scale(double a, const double* x, double* out, std::size_t n) {
    active().scale(a, x, out, n);
}
inline void add(const double* x, const double* y, double* out, std::size_t n) {
    active().add(x, y, out, n);
}
inline void sub(const double* x, const double* y, double* out, std::size_t n) {
    active().sub(x, y, out, n);
}
inline void mul(const double* x, const double* y, double* out, std::size_t n) {
    active().mul(x, y, out, n);
}
inline void matvec(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
    active().matvec(w, rows, cols, x, y);
}
inline void matvec_t_acc(const double* w, std::size_t rows, std::size_t cols,
                         const double* g, double* out) {
    active().matvec_t_acc(w, rows, cols, g, out);
}
inline void ger_acc(double* w, std::size_t rows, std::size_t cols,
                    const double* g, const double* x) {
    active().ger_acc(w, rows, cols, g, x);
}

}  // namespace vrm::kernels
