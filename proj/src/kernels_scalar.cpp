#include "vrm/kernels.hpp"

namespace vrm::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i];
    }
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void scale_scalar(double a, const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a * x[i];
    }
}

void add_scalar(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] + y[i];
    }
}

void sub_scalar(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] - y[i];
    }
}

void mul_scalar(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] * y[i];
    }
}

void matvec_scalar(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_scalar(w + r * cols, x, cols);
    }
}

void matvec_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                         const double* g, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        axpy_scalar(g[r], w + r * cols, out, cols);
    }
}

void ger_acc_scalar(double* w, std::size_t rows, std::size_t cols,
                    const double* g, const double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        axpy_scalar(g[r], x, w + r * cols, cols);
    }
}

}  // namespace

const Table& scalar_table() {
    static const Table t{
        dot_scalar,   sum_scalar, axpy_scalar,   scale_scalar,
        add_scalar,   sub_scalar, mul_scalar,    matvec_scalar,
        matvec_t_acc_scalar,      ger_acc_scalar,
    };
    return t;
}

}  // namespace vrm::kernels
