#include <doctest.h>

#include <cmath>

#include "stochbond/decompose.hpp"

using namespace stochbond;

namespace {

const MarketCoefficients kDefault = make_constant_coefficients(0.10, 0.20, 0.05, 0.01, 0.01);

Estimate mean_sq(const std::vector<double>& v) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
    return mean_se(sq);
}

double corr_z(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean_se(x).value, my = mean_se(y).value;
    std::vector<double> prod(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
    const Estimate e = mean_se(prod);
    return e.value / e.se;
}

}  // namespace

TEST_CASE("constant claims decompose into cash only") {
    const Claim flat = Claim::custom([](double, double) { return 2.5; });
    const MeasureShift shift = theta_min_norm(kDefault);
    const GridSolution H = solve_H(kDefault, shift, flat, {}, 1.0);
    const PathBundle bundle = simulate_paths(kDefault, {1.0, 64}, 2000, 81, &shift);
    const Decomposition d = decompose_markov(kDefault, flat, shift, H, bundle);
    CHECK(d.c_theta == doctest::Approx(2.5).epsilon(1e-8));
    CHECK(mean_sq(d.R).value <= 1e-12);
    CHECK(mean_sq(d.I).value <= 1e-12);
    CHECK(mean_sq(d.recon_error).value <= 1e-12);
}

TEST_CASE("the stock claim regresses to a unit hedge") {
    const Claim stock = Claim::custom([](double st, double) { return st; });
    const MeasureShift shift = theta_min_norm(kDefault);
    const PathBundle bundle = simulate_paths(kDefault, {1.0, 64}, 20000, 83, &shift);
    const Decomposition d = decompose_regression(kDefault, stock, shift, bundle);

    CHECK(std::abs(d.c_theta - 1.0) <= 0.01);
    for (int k : {0, 20, 50}) {
        double g = 0.0;
        for (long p = 0; p < bundle.n_paths(); ++p)
            g += d.gamma(static_cast<std::size_t>(p), static_cast<std::size_t>(k));
        g /= static_cast<double>(bundle.n_paths());
        CHECK(g == doctest::Approx(1.0).epsilon(0.05));
    }
    // the residual is regression noise, tiny next to the claim's variance
    const Estimate var_xi = mean_sq([&] {
        std::vector<double> c(d.xi);
        const double m = mean_se(d.xi).value;
        for (double& v : c) v -= m;
        return c;
    }());
    CHECK(mean_sq(d.R).value <= 0.05 * var_xi.value);
}

TEST_CASE("Markov and regression routes agree on the put") {
    const MeasureShift shift = theta_min_norm(kDefault);
    const Claim put = Claim::put(1.0);
    const GridSolution H = solve_H(kDefault, shift, put, {}, 1.0);
    const PathBundle bundle = simulate_paths(kDefault, {1.0, 128}, 20000, 85, &shift);
    const Decomposition dm = decompose_markov(kDefault, put, shift, H, bundle);
    const Decomposition dr = decompose_regression(kDefault, put, shift, bundle);

    const Estimate exi = mean_se(dm.xi);
    CHECK(std::abs(dm.c_theta - dr.c_theta) <= 3.0 * exi.se + 2e-3);

    // gamma at t=0 is a deterministic function of the initial state
    const double gm = dm.gamma(0, 0);
    double gr = 0.0;
    for (long p = 0; p < bundle.n_paths(); ++p) gr += dr.gamma(static_cast<std::size_t>(p), 0);
    gr /= static_cast<double>(bundle.n_paths());
    CHECK(std::abs(gm - gr) <= 5e-2);
}

TEST_CASE("residual integrand is pointwise orthogonal to V") {
    const MeasureShift shift = theta_k_family(kDefault, 0.1);
    const Claim put = Claim::put(1.0);
    const GridSolution H = solve_H(kDefault, shift, put, {}, 1.0);
    const PathBundle bundle = simulate_paths(kDefault, {1.0, 32}, 64, 87, &shift);
    const Decomposition d = decompose_markov(kDefault, put, shift, H, bundle);
    for (long p = 0; p < 64; ++p) {
        for (int k = 0; k < 32; ++k) {
            const DerivedCoefficients dc = derive(
                kDefault, {bundle.s_log(p, k), bundle.b_log(p, k), bundle.grid().t(k)});
            const double dotv =
                d.eta1(static_cast<std::size_t>(p), static_cast<std::size_t>(k)) * dc.V.x +
                d.eta2(static_cast<std::size_t>(p), static_cast<std::size_t>(k)) * dc.V.y;
            CHECK(std::abs(dotv) <= 1e-10);
        }
    }
}

TEST_CASE("put decomposition: reconstruction, orthogonality, Pythagoras") {
    const MeasureShift shift = theta_min_norm(kDefault);
    const Claim put = Claim::put(1.0);
    const GridSolution H = solve_H(kDefault, shift, put, {}, 1.0);
    const PathBundle bundle = simulate_paths(kDefault, {1.0, 256}, 8000, 89, &shift);
    const Decomposition d = decompose_markov(kDefault, put, shift, H, bundle);

    CHECK(mean_sq(d.recon_error).value <= 1e-4);
    CHECK(std::abs(corr_z(d.R, d.I)) <= 3.0);

    // Var(xi) = E I^2 + E R^2 up to sampling noise and discretization
    std::vector<double> centered(d.xi);
    const double m = mean_se(d.xi).value;
    for (double& v : centered) v -= m;
    const Estimate var_xi = mean_sq(centered);
    const Estimate ei2 = mean_sq(d.I);
    const Estimate er2 = mean_sq(d.R);
    const double se = std::sqrt(var_xi.se * var_xi.se + ei2.se * ei2.se + er2.se * er2.se);
    CHECK(std::abs(var_xi.value - ei2.value - er2.value) <= 3.0 * se + 2e-4);
}

TEST_CASE("vanishing deviations give exact replication in the limit") {
    const MarketCoefficients mc = make_constant_coefficients(0.10, 0.20, 0.05, 0.01, 0.0);
    const MeasureShift shift = theta_min_norm(mc);
    const Claim put = Claim::put(1.0);
    auto recon_at = [&](int n_steps) {
        const GridSolution H = solve_H(mc, shift, put, {}, 1.0);
        const PathBundle bundle = simulate_paths(mc, {1.0, n_steps}, 4000, 91, &shift);
        const Decomposition d = decompose_markov(mc, put, shift, H, bundle);
        CHECK(mean_sq(d.R).value <= 1e-28);  // eta is the zero projection up to rounding
        return mean_sq(d.recon_error).value;
    };
    const double coarse = recon_at(64);
    const double fine = recon_at(256);
    CHECK(fine < coarse);
    CHECK(fine <= 1e-4);
}

TEST_CASE("in a complete market the hedge is measure-independent") {
    // with rho_tilde = 0 every member shares theta_1 = a_t / sigma_t, and
    // neither the price nor the hedge can depend on the free theta_2
    const MarketCoefficients mc = make_constant_coefficients(0.10, 0.20, 0.05, 0.01, 0.0);
    const DerivedCoefficients dc = derive(mc, {0, 0, 0});
    const Claim put = Claim::put(1.0);
    auto gamma0 = [&](const MeasureShift& shift) {
        const GridSolution H = solve_H(mc, shift, put, {}, 1.0);
        const PathBundle bundle = simulate_paths(mc, {1.0, 16}, 4, 93, &shift);
        return decompose_markov(mc, put, shift, H, bundle).gamma(0, 0);
    };
    const double a = gamma0(make_explicit(mc, {dc.a_t / dc.V.x, 0.0}));
    const double b = gamma0(make_explicit(mc, {dc.a_t / dc.V.x, 1.0}));
    CHECK(std::abs(a - b) <= 1e-8);
}

TEST_CASE("orthogonal claims carry no tradable component") {
    const PathBundle bundle = simulate_paths(kDefault, {1.0, 128}, 20000, 95);
    const std::vector<double> zeta =
        orthogonal_claim(kDefault, [](double) { return 1.0; }, bundle);

    const Estimate ez = mean_se(zeta);
    CHECK(std::abs(ez.value) <= 3.0 * ez.se);

    const DerivedCoefficients dc = derive(kDefault, {0, 0, 0});
    const Estimate ez2 = mean_sq(zeta);
    CHECK(std::abs(ez2.value - dc.V.norm2()) <= 3.0 * ez2.se + 1e-3);

    // uncorrelated with the terminal stock gain
    std::vector<double> gain(zeta.size());
    for (long p = 0; p < bundle.n_paths(); ++p)
        gain[static_cast<std::size_t>(p)] = bundle.S_tilde(p, 128) - bundle.S_tilde(p, 0);
    CHECK(std::abs(corr_z(zeta, gain)) <= 3.0);

    const MarketCoefficients complete = make_constant_coefficients(0.10, 0.20, 0.05, 0.01, 0.0);
    const PathBundle cb = simulate_paths(complete, {1.0, 8}, 4, 1);
    CHECK_THROWS_AS(orthogonal_claim(complete, [](double) { return 1.0; }, cb), ConfigError);
}

TEST_CASE("local risk minimization picks out the minimal-norm measure") {
    const Claim put = Claim::put(1.0);
    const PathBundle bundle_P = simulate_paths(kDefault, {1.0, 128}, 20000, 97);

    const MeasureShift mn = theta_min_norm(kDefault);
    const GridSolution Hmn = solve_H(kDefault, mn, put, {}, 1.0);
    CHECK(std::abs(lrm_orthogonality_z(kDefault, Hmn, mn, bundle_P)) <= 3.0);

    const MeasureShift sc = theta_stock_consensus(kDefault);
    const GridSolution Hsc = solve_H(kDefault, sc, put, {}, 1.0);
    CHECK(std::abs(lrm_orthogonality_z(kDefault, Hsc, sc, bundle_P)) > 3.0);
}
