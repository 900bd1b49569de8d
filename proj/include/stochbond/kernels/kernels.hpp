#ifndef STOCHBOND_KERNELS_HPP
#define STOCHBOND_KERNELS_HPP

#include <cstddef>

// Hot inner loops of the Monte Carlo engines. Scalar reference implementations
// plus AVX2/FMA variants selected once at startup; STOCHBOND_KERNELS=scalar|avx2
// overrides the automatic choice. All kernels are deterministic for a fixed
// backend: reductions use a fixed 4-lane accumulation order.

namespace stochbond::kernels {

struct Ops {
    // s[i] += ds + cs1*z1[i] + cs2*z2[i];  b[i] += db + cb1*z1[i] + cb2*z2[i]
    void (*step_const)(std::size_t n, double* s, double* b, const double* z1, const double* z2,
                       double ds, double cs1, double cs2, double db, double cb1, double cb2);
    // acc[i] += c0 + c1*x1[i] + c2*x2[i]
    void (*axpy2)(std::size_t n, double* acc, double c0, double c1, const double* x1, double c2,
                  const double* x2);
    // acc[i] += a1[i]*x1[i] + a2[i]*x2[i]
    void (*fma_dot2)(std::size_t n, double* acc, const double* a1, const double* x1,
                     const double* a2, const double* x2);
    // out[i] = max(a[i] - b[i], 0)
    void (*relu_sub)(std::size_t n, double* out, const double* a, const double* b);
    double (*sum)(std::size_t n, const double* x);
    double (*dot)(std::size_t n, const double* x, const double* y);
    const char* name;
};

const Ops& scalar_ops();
// Returns nullptr when AVX2+FMA is unavailable on this CPU.
const Ops* avx2_ops();

// Backend in use; resolved on first call (honours STOCHBOND_KERNELS).
const Ops& active();
// Force a backend by name ("auto", "scalar", "avx2"); throws on unknown or
// unsupported names. Intended for tests and the CLI.
void force_backend(const char* name);

}  // namespace stochbond::kernels

#endif
