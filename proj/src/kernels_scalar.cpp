#include "stochbond/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace stochbond::kernels {

namespace {

// All variants use explicit fused multiply-adds in the association of the
// vector code so every backend produces bit-identical results.
void step_const_scalar(std::size_t n, double* s, double* b, const double* z1, const double* z2,
                       double ds, double cs1, double cs2, double db, double cb1, double cb2) {
    for (std::size_t i = 0; i < n; ++i) {
        s[i] += std::fma(cs1, z1[i], std::fma(cs2, z2[i], ds));
        b[i] += std::fma(cb1, z1[i], std::fma(cb2, z2[i], db));
    }
}

void axpy2_scalar(std::size_t n, double* acc, double c0, double c1, const double* x1, double c2,
                  const double* x2) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += std::fma(c1, x1[i], std::fma(c2, x2[i], c0));
}

void fma_dot2_scalar(std::size_t n, double* acc, const double* a1, const double* x1,
                     const double* a2, const double* x2) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += std::fma(a1[i], x1[i], a2[i] * x2[i]);
}

void relu_sub_scalar(std::size_t n, double* out, const double* a, const double* b) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(a[i] - b[i], 0.0);
}

// 4 independent accumulators, same association as the vector variant.
double sum_scalar(std::size_t n, const double* x) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += x[i];
        acc[1] += x[i + 1];
        acc[2] += x[i + 2];
        acc[3] += x[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] = std::fma(x[i], y[i], acc[0]);
        acc[1] = std::fma(x[i + 1], y[i + 1], acc[1]);
        acc[2] = std::fma(x[i + 2], y[i + 2], acc[2]);
        acc[3] = std::fma(x[i + 3], y[i + 3], acc[3]);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail = std::fma(x[i], y[i], tail);
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {step_const_scalar, axpy2_scalar, fma_dot2_scalar,
                            relu_sub_scalar,   sum_scalar,   dot_scalar,
                            "scalar"};
    return ops;
}

}  // namespace stochbond::kernels
