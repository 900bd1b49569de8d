#include "stochbond/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace stochbond::kernels {

namespace {

void step_const_avx2(std::size_t n, double* s, double* b, const double* z1, const double* z2,
                     double ds, double cs1, double cs2, double db, double cb1, double cb2) {
    const __m256d vds = _mm256_set1_pd(ds), vcs1 = _mm256_set1_pd(cs1), vcs2 = _mm256_set1_pd(cs2);
    const __m256d vdb = _mm256_set1_pd(db), vcb1 = _mm256_set1_pd(cb1), vcb2 = _mm256_set1_pd(cb2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vz1 = _mm256_loadu_pd(z1 + i);
        const __m256d vz2 = _mm256_loadu_pd(z2 + i);
        __m256d vs = _mm256_loadu_pd(s + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        vs = _mm256_add_pd(vs, _mm256_fmadd_pd(vcs1, vz1, _mm256_fmadd_pd(vcs2, vz2, vds)));
        vb = _mm256_add_pd(vb, _mm256_fmadd_pd(vcb1, vz1, _mm256_fmadd_pd(vcb2, vz2, vdb)));
        _mm256_storeu_pd(s + i, vs);
        _mm256_storeu_pd(b + i, vb);
    }
    for (; i < n; ++i) {
        s[i] += std::fma(cs1, z1[i], std::fma(cs2, z2[i], ds));
        b[i] += std::fma(cb1, z1[i], std::fma(cb2, z2[i], db));
    }
}

void axpy2_avx2(std::size_t n, double* acc, double c0, double c1, const double* x1, double c2,
                const double* x2) {
    const __m256d vc0 = _mm256_set1_pd(c0), vc1 = _mm256_set1_pd(c1), vc2 = _mm256_set1_pd(c2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(acc + i);
        va = _mm256_add_pd(va, _mm256_fmadd_pd(vc1, _mm256_loadu_pd(x1 + i),
                                               _mm256_fmadd_pd(vc2, _mm256_loadu_pd(x2 + i), vc0)));
        _mm256_storeu_pd(acc + i, va);
    }
    for (; i < n; ++i) acc[i] += std::fma(c1, x1[i], std::fma(c2, x2[i], c0));
}

void fma_dot2_avx2(std::size_t n, double* acc, const double* a1, const double* x1, const double* a2,
                   const double* x2) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(acc + i);
        va = _mm256_add_pd(
            va, _mm256_fmadd_pd(_mm256_loadu_pd(a1 + i), _mm256_loadu_pd(x1 + i),
                                _mm256_mul_pd(_mm256_loadu_pd(a2 + i), _mm256_loadu_pd(x2 + i))));
        _mm256_storeu_pd(acc + i, va);
    }
    for (; i < n; ++i) acc[i] += std::fma(a1[i], x1[i], a2[i] * x2[i]);
}

void relu_sub_avx2(std::size_t n, double* out, const double* a, const double* b) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_max_pd(d, zero));
    }
    for (; i < n; ++i) out[i] = std::max(a[i] - b[i], 0.0);
}

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    // matches the scalar reference: (acc0+acc1) + (acc2+acc3)
    const double a01 = _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
    const double a23 = _mm_cvtsd_f64(hi) + _mm_cvtsd_f64(_mm_unpackhi_pd(hi, hi));
    return a01 + a23;
}

double sum_avx2(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return hsum(acc) + tail;
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double tail = 0.0;
    for (; i < n; ++i) tail = std::fma(x[i], y[i], tail);
    return hsum(acc) + tail;
}

}  // namespace

const Ops* avx2_ops() {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
    static const Ops ops = {step_const_avx2, axpy2_avx2, fma_dot2_avx2,
                            relu_sub_avx2,   sum_avx2,   dot_avx2,
                            "avx2"};
    return &ops;
}

}  // namespace stochbond::kernels

#else

namespace stochbond::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace stochbond::kernels

#endif
