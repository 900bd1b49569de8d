#include <doctest.h>

#include <cmath>

#include "stochbond/decompose.hpp"
#include "stochbond/pde.hpp"

using namespace stochbond;

namespace {

const MarketCoefficients kDefault = make_constant_coefficients(0.10, 0.20, 0.05, 0.01, 0.01);
const MarketCoefficients kBS = make_constant_coefficients(0.10, 0.20, 0.0, 0.0, 0.0);

}  // namespace

TEST_CASE("Black-Scholes degeneration solves the ATM put to 1e-3") {
    const GridSolution H = solve_H(kBS, theta_min_norm(kBS), Claim::put(1.0), {}, 1.0);
    const double exact = 2.0 * norm_cdf(0.1) - 1.0;
    CHECK(std::abs(H.value(0.0, 0.0, 0.0) - exact) <= 1e-3);
}

TEST_CASE("constant payoff is a fixed point of the solver") {
    const Claim one = Claim::custom([](double, double) { return 1.0; });
    const GridSolution H = solve_H(kDefault, theta_min_norm(kDefault), one, {}, 1.0);
    CHECK(H.min_value() >= 1.0 - 1e-9);
    CHECK(H.max_value() <= 1.0 + 1e-9);
    CHECK(std::abs(H.value(0.02, -0.01, 0.3) - 1.0) <= 1e-9);
}

TEST_CASE("bounded payoffs respect the discrete maximum principle") {
    const Claim capped = Claim::custom([](double st, double) { return std::min(1.0, st); });
    const GridSolution H = solve_H(kDefault, theta_k_family(kDefault, 0.2), capped, {}, 1.0);
    // the explicit cross-term predictor can overshoot by O(dt*h) only
    CHECK(H.min_value() >= -1e-3);
    CHECK(H.max_value() <= 1.0 + 1e-3);
}

TEST_CASE("smooth power payoff converges to the lognormal moment") {
    // E[exp(lambda s_T)] with s Gaussian under any member measure:
    // drift -sigma_t^2/2 - rho_t^2/2, variance (sigma_t^2 + rho_t^2) T
    const DerivedCoefficients d = derive(kDefault, {0, 0, 0});
    const double var = d.V.norm2();  // sigma_t^2 + rho_t^2
    const double lambda = 0.5;
    const double exact = std::exp(lambda * (-0.5 * var) + 0.5 * lambda * lambda * var);
    const Claim smooth = Claim::custom([](double st, double) { return std::sqrt(st); });

    auto err_at = [&](int ns, int nb, int nt) {
        GridSpec spec;
        spec.n_s = ns;
        spec.n_b = nb;
        spec.n_t = nt;
        const GridSolution H = solve_H(kDefault, theta_min_norm(kDefault), smooth, spec, 1.0);
        return std::abs(H.value(0.0, 0.0, 0.0) - exact);
    };
    const double coarse = err_at(51, 31, 32);
    const double fine = err_at(101, 61, 64);
    CHECK(fine <= 0.6 * coarse);
    CHECK(fine <= 5e-4);
}

TEST_CASE("PDE price matches Monte Carlo under the K-family") {
    const MeasureShift shift = theta_k_family(kDefault, 0.05);
    const GridSolution H = solve_H(kDefault, shift, Claim::put(1.0), {}, 1.0);
    PriceParams pp;
    pp.seed = 61;
    const PriceResult mc = price(kDefault, Claim::put(1.0), shift, pp);
    CHECK(std::abs(H.value(0.0, 0.0, 0.0) - mc.price.value) <=
          std::max(3.0 * mc.price.se, 2e-3));
}

TEST_CASE("error-moment equation matches the simulated residual") {
    const MeasureShift shift = theta_min_norm(kDefault);
    const GridSolution H = solve_H(kDefault, shift, Claim::put(1.0), {}, 1.0);
    const ErrorMomentSolution sol = error_moment_pde(kDefault, shift, H);

    // theta parallel to V makes the cross source A = eta . theta vanish
    CHECK(std::abs(sol.m_at_origin) <= 1e-10);

    const PathBundle bundle = simulate_paths(kDefault, {1.0, 256}, 20000, 71);
    const std::vector<double> R = residual_under_P(kDefault, H, shift, bundle);
    std::vector<double> r2(R.size());
    for (std::size_t i = 0; i < R.size(); ++i) r2[i] = R[i] * R[i];
    const Estimate e = mean_se(r2);
    CHECK(sol.value > 0.0);
    CHECK(std::abs(sol.value - e.value) <= std::max(0.10 * e.value, 3.0 * e.se));
}

TEST_CASE("complete market has zero intrinsic risk") {
    const MarketCoefficients mc = make_constant_coefficients(0.10, 0.20, 0.05, 0.01, 0.0);
    const MeasureShift shift = theta_min_norm(mc);
    const GridSolution H = solve_H(mc, shift, Claim::put(1.0), {}, 1.0);
    const ErrorMomentSolution sol = error_moment_pde(mc, shift, H);
    // eta is exactly the zero projection when rho_t = 0
    CHECK(std::abs(sol.value) <= 1e-10);
}
