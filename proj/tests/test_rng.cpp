#include <doctest.h>

#include <cmath>
#include <vector>

#include "stochbond/rng.hpp"

using namespace stochbond;

TEST_CASE("counter rng is deterministic and stream-independent") {
    const rng::NormalPair a = rng::normal_pair(7, 123, 45);
    const rng::NormalPair b = rng::normal_pair(7, 123, 45);
    CHECK(a.z1 == b.z1);
    CHECK(a.z2 == b.z2);
    const rng::NormalPair c = rng::normal_pair(8, 123, 45);
    CHECK(a.z1 != c.z1);
}

TEST_CASE("uniforms live in the open unit interval") {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const double u = rng::uniform(3, i);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments at 1e5 draws") {
    const std::size_t n = 100000;
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    for (std::size_t i = 0; i < n / 2; ++i) {
        const rng::NormalPair p = rng::normal_pair(11, i, 0);
        for (double z : {p.z1, p.z2}) {
            m1 += z;
            m2 += z * z;
            m3 += z * z * z;
            m4 += z * z * z * z;
        }
    }
    m1 /= n;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    CHECK(std::abs(m1) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(m3) < 0.05);           // skew
    CHECK(std::abs(m4 - 3.0) < 0.1);      // excess kurtosis
}
