#include <doctest.h>

#include <string>
#include <vector>

#include "stochbond/kernels/kernels.hpp"
#include "stochbond/rng.hpp"

using namespace stochbond;

namespace {

std::vector<double> randoms(std::size_t n, std::uint64_t seed) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng::normal(seed, i);
    return v;
}

}  // namespace

TEST_CASE("scalar and AVX2 kernels agree bitwise") {
    const kernels::Ops& sc = kernels::scalar_ops();
    const kernels::Ops* vx = kernels::avx2_ops();
    if (!vx) return;  // platform without AVX2+FMA: scalar path is the only path

    // odd length exercises the vector tail
    const std::size_t n = 1003;
    const std::vector<double> z1 = randoms(n, 1), z2 = randoms(n, 2);
    const std::vector<double> a1 = randoms(n, 3), a2 = randoms(n, 4);

    std::vector<double> s1 = randoms(n, 5), b1 = randoms(n, 6);
    std::vector<double> s2 = s1, b2 = b1;
    sc.step_const(n, s1.data(), b1.data(), z1.data(), z2.data(), 0.01, 0.19, -0.01, 0.002, 0.01,
                  0.01);
    vx->step_const(n, s2.data(), b2.data(), z1.data(), z2.data(), 0.01, 0.19, -0.01, 0.002, 0.01,
                   0.01);
    CHECK(s1 == s2);
    CHECK(b1 == b2);

    std::vector<double> acc1 = randoms(n, 7), acc2 = acc1;
    sc.axpy2(n, acc1.data(), 0.5, 1.5, z1.data(), -2.0, z2.data());
    vx->axpy2(n, acc2.data(), 0.5, 1.5, z1.data(), -2.0, z2.data());
    CHECK(acc1 == acc2);

    acc1 = randoms(n, 8);
    acc2 = acc1;
    sc.fma_dot2(n, acc1.data(), a1.data(), z1.data(), a2.data(), z2.data());
    vx->fma_dot2(n, acc2.data(), a1.data(), z1.data(), a2.data(), z2.data());
    CHECK(acc1 == acc2);

    std::vector<double> o1(n), o2(n);
    sc.relu_sub(n, o1.data(), a1.data(), a2.data());
    vx->relu_sub(n, o2.data(), a1.data(), a2.data());
    CHECK(o1 == o2);

    CHECK(sc.sum(n, z1.data()) == vx->sum(n, z1.data()));
    CHECK(sc.dot(n, z1.data(), z2.data()) == vx->dot(n, z1.data(), z2.data()));
}

TEST_CASE("scalar kernels compute what they claim") {
    const kernels::Ops& sc = kernels::scalar_ops();
    std::vector<double> x = {1.0, -2.0, 3.0};
    std::vector<double> y = {0.5, 0.5, 0.5};
    CHECK(sc.sum(3, x.data()) == doctest::Approx(2.0));
    CHECK(sc.dot(3, x.data(), y.data()) == doctest::Approx(1.0));
    std::vector<double> out(3);
    sc.relu_sub(3, out.data(), x.data(), y.data());
    CHECK(out[0] == doctest::Approx(0.5));
    CHECK(out[1] == 0.0);
    CHECK(out[2] == doctest::Approx(2.5));
}

TEST_CASE("backend forcing") {
    CHECK_THROWS(kernels::force_backend("neon"));
    kernels::force_backend("scalar");
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::force_backend("auto");
}
