#include "stochbond/decompose.hpp"

#include <algorithm>

namespace stochbond {

namespace {

void init_decomposition(Decomposition& dec, const PathBundle& bundle, std::string method) {
    const std::size_t np = static_cast<std::size_t>(bundle.n_paths());
    const std::size_t ns = static_cast<std::size_t>(bundle.grid().n_steps);
    dec.alpha = Array2D(np, ns);
    dec.gamma = Array2D(np, ns);
    dec.eta1 = Array2D(np, ns);
    dec.eta2 = Array2D(np, ns);
    dec.R.assign(np, 0.0);
    dec.I.assign(np, 0.0);
    dec.xi.assign(np, 0.0);
    dec.recon_error.assign(np, 0.0);
    dec.method = std::move(method);
}

// from the integrand U at one (path, step): project, store, accumulate
void apply_node(Decomposition& dec, const PathBundle& bundle, long p, int k, const Vec2& U,
                const DerivedCoefficients& d) {
    const double alpha = U.dot(d.V) / d.V.norm2();
    const Vec2 eta = U - d.V * alpha;
    dec.alpha(static_cast<std::size_t>(p), static_cast<std::size_t>(k)) = alpha;
    dec.gamma(static_cast<std::size_t>(p), static_cast<std::size_t>(k)) =
        alpha * std::exp(-bundle.s_log(p, k));
    dec.eta1(static_cast<std::size_t>(p), static_cast<std::size_t>(k)) = eta.x;
    dec.eta2(static_cast<std::size_t>(p), static_cast<std::size_t>(k)) = eta.y;
    dec.R[static_cast<std::size_t>(p)] += eta.x * bundle.dw1(p, k) + eta.y * bundle.dw2(p, k);
    dec.I[static_cast<std::size_t>(p)] +=
        dec.gamma(static_cast<std::size_t>(p), static_cast<std::size_t>(k)) *
        (bundle.S_tilde(p, k + 1) - bundle.S_tilde(p, k));
}

void finish(Decomposition& dec, const Claim& claim, const PathBundle& bundle) {
    const int kT = bundle.grid().n_steps;
    for (long p = 0; p < bundle.n_paths(); ++p) {
        dec.xi[static_cast<std::size_t>(p)] = claim.xi(bundle.s_log(p, kT), bundle.b_log(p, kT));
        dec.recon_error[static_cast<std::size_t>(p)] =
            dec.xi[static_cast<std::size_t>(p)] - dec.c_theta - dec.I[static_cast<std::size_t>(p)] -
            dec.R[static_cast<std::size_t>(p)];
    }
}

// Cholesky solve of (G + ridge*I) beta = rhs, in place, n small
void chol_solve(std::vector<double>& G, std::vector<double>& rhs, int n, double ridge) {
    for (int i = 0; i < n; ++i) G[static_cast<std::size_t>(i) * n + i] += ridge;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = G[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                sum -= G[static_cast<std::size_t>(i) * n + k] * G[static_cast<std::size_t>(j) * n + k];
            if (i == j) {
                if (sum <= 0.0) throw NumericalError("regression: Gram matrix not positive definite");
                G[static_cast<std::size_t>(i) * n + j] = std::sqrt(sum);
            } else {
                G[static_cast<std::size_t>(i) * n + j] = sum / G[static_cast<std::size_t>(j) * n + j];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        double sum = rhs[i];
        for (int k = 0; k < i; ++k) sum -= G[static_cast<std::size_t>(i) * n + k] * rhs[k];
        rhs[i] = sum / G[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double sum = rhs[i];
        for (int k = i + 1; k < n; ++k) sum -= G[static_cast<std::size_t>(k) * n + i] * rhs[k];
        rhs[i] = sum / G[static_cast<std::size_t>(i) * n + i];
    }
}

}  // namespace

Decomposition decompose_markov(const MarketCoefficients& mc, const Claim& claim,
                               const MeasureShift& shift, const GridSolution& H,
                               const PathBundle& bundle) {
    if (bundle.measure_tag() != shift.tag)
        throw ConfigError("decompose_markov: bundle generated under '" + bundle.measure_tag() +
                          "', expected '" + shift.tag + "'");
    Decomposition dec;
    init_decomposition(dec, bundle, "markov");
    dec.c_theta = H.value(bundle.s_log(0, 0), bundle.b_log(0, 0), 0.0);

    const long base_extrap = H.extrapolation_count();
    double f_gap = 0.0;
    long n_nodes = 0;
    for (long p = 0; p < bundle.n_paths(); ++p) {
        for (int k = 0; k < bundle.grid().n_steps; ++k) {
            const double s = bundle.s_log(p, k);
            const double b = bundle.b_log(p, k);
            const double t = bundle.grid().t(k);
            const Vec2 grad = H.gradient(s, b, t);
            const DerivedCoefficients d = derive(mc, {s, b, t});
            const Vec2 U = d.V * grad.x + d.V_t * grad.y;
            apply_node(dec, bundle, p, k, U, d);
            const double alpha =
                dec.alpha(static_cast<std::size_t>(p), static_cast<std::size_t>(k));
            const double f_lit = (d.V.x * grad.x - (-d.V.y) * grad.y) / d.V.norm();
            f_gap += std::abs(f_lit - alpha);
            ++n_nodes;
        }
    }
    dec.f_printed_gap = n_nodes > 0 ? f_gap / static_cast<double>(n_nodes) : 0.0;
    dec.extrapolations = H.extrapolation_count() - base_extrap;
    finish(dec, claim, bundle);
    return dec;
}

Decomposition decompose_regression(const MarketCoefficients& mc, const Claim& claim,
                                   const MeasureShift& shift, const PathBundle& bundle,
                                   int degree, double ridge) {
    if (bundle.measure_tag() != shift.tag)
        throw ConfigError("decompose_regression: bundle measure mismatch");
    if (degree < 1 || degree > 5) throw ConfigError("decompose_regression: degree out of range");

    const long np = bundle.n_paths();
    const int n_steps = bundle.grid().n_steps;
    const double dt = bundle.grid().dt();
    if (np < 50) throw ConfigError("decompose_regression: too few paths");

    Decomposition dec;
    init_decomposition(dec, bundle, "regression");

    // monomial exponents (s^a * b^c, a + c <= degree)
    std::vector<std::pair<int, int>> terms;
    for (int total = 0; total <= degree; ++total)
        for (int a = 0; a <= total; ++a) terms.emplace_back(a, total - a);
    const int nt = static_cast<int>(terms.size());

    std::vector<double> xi(static_cast<std::size_t>(np));
    const int kT = n_steps;
    for (long p = 0; p < np; ++p)
        xi[static_cast<std::size_t>(p)] = claim.xi(bundle.s_log(p, kT), bundle.b_log(p, kT));

    std::vector<double> phi(static_cast<std::size_t>(nt));
    std::vector<double> gram(static_cast<std::size_t>(nt) * nt);
    std::vector<double> rhs0(static_cast<std::size_t>(nt));
    std::vector<double> rhs1(static_cast<std::size_t>(nt)), rhs2(static_cast<std::size_t>(nt));
    std::vector<double> beta0, beta1, beta2;
    std::vector<double> phis(static_cast<std::size_t>(np) * nt);

    for (int k = 0; k < n_steps; ++k) {
        // standardize the state at this step for conditioning
        double ms = 0.0, mb = 0.0, vs = 0.0, vb = 0.0;
        for (long p = 0; p < np; ++p) {
            ms += bundle.s_log(p, k);
            mb += bundle.b_log(p, k);
        }
        ms /= np;
        mb /= np;
        for (long p = 0; p < np; ++p) {
            vs += (bundle.s_log(p, k) - ms) * (bundle.s_log(p, k) - ms);
            vb += (bundle.b_log(p, k) - mb) * (bundle.b_log(p, k) - mb);
        }
        const double sds = std::max(std::sqrt(vs / np), 1e-12);
        const double sdb = std::max(std::sqrt(vb / np), 1e-12);

        std::fill(gram.begin(), gram.end(), 0.0);
        std::fill(rhs0.begin(), rhs0.end(), 0.0);
        std::fill(rhs1.begin(), rhs1.end(), 0.0);
        std::fill(rhs2.begin(), rhs2.end(), 0.0);
        for (long p = 0; p < np; ++p) {
            const double zs = (bundle.s_log(p, k) - ms) / sds;
            const double zb = (bundle.b_log(p, k) - mb) / sdb;
            for (int q = 0; q < nt; ++q) {
                double v = 1.0;
                for (int e = 0; e < terms[static_cast<std::size_t>(q)].first; ++e) v *= zs;
                for (int e = 0; e < terms[static_cast<std::size_t>(q)].second; ++e) v *= zb;
                phi[static_cast<std::size_t>(q)] = v;
                phis[static_cast<std::size_t>(p) * nt + q] = v;
            }
            for (int q = 0; q < nt; ++q) {
                for (int r = 0; r <= q; ++r)
                    gram[static_cast<std::size_t>(q) * nt + r] +=
                        phi[static_cast<std::size_t>(q)] * phi[static_cast<std::size_t>(r)];
                rhs0[static_cast<std::size_t>(q)] +=
                    phi[static_cast<std::size_t>(q)] * xi[static_cast<std::size_t>(p)];
            }
        }
        for (int q = 0; q < nt; ++q)
            for (int r = q + 1; r < nt; ++r)
                gram[static_cast<std::size_t>(q) * nt + r] =
                    gram[static_cast<std::size_t>(r) * nt + q];

        // conditional-mean control variate: center the claim by its fitted
        // expectation given the state, which leaves E[(xi - h) dW | state]
        // unchanged but removes most of the target's variance
        beta0 = rhs0;
        std::vector<double> g0 = gram;
        chol_solve(g0, beta0, nt, ridge * static_cast<double>(np));

        for (long p = 0; p < np; ++p) {
            double h = 0.0;
            for (int q = 0; q < nt; ++q)
                h += beta0[static_cast<std::size_t>(q)] *
                     phis[static_cast<std::size_t>(p) * nt + q];
            const double centered = xi[static_cast<std::size_t>(p)] - h;
            const double y1 = centered * bundle.dw1(p, k) / dt;
            const double y2 = centered * bundle.dw2(p, k) / dt;
            for (int q = 0; q < nt; ++q) {
                rhs1[static_cast<std::size_t>(q)] +=
                    phis[static_cast<std::size_t>(p) * nt + q] * y1;
                rhs2[static_cast<std::size_t>(q)] +=
                    phis[static_cast<std::size_t>(p) * nt + q] * y2;
            }
        }

        beta1 = rhs1;
        beta2 = rhs2;
        std::vector<double> g1 = gram, g2 = gram;
        chol_solve(g1, beta1, nt, ridge * static_cast<double>(np));
        chol_solve(g2, beta2, nt, ridge * static_cast<double>(np));

        for (long p = 0; p < np; ++p) {
            Vec2 U{0.0, 0.0};
            for (int q = 0; q < nt; ++q) {
                U.x += beta1[static_cast<std::size_t>(q)] * phis[static_cast<std::size_t>(p) * nt + q];
                U.y += beta2[static_cast<std::size_t>(q)] * phis[static_cast<std::size_t>(p) * nt + q];
            }
            const DerivedCoefficients d =
                derive(mc, {bundle.s_log(p, k), bundle.b_log(p, k), bundle.grid().t(k)});
            apply_node(dec, bundle, p, k, U, d);
        }
    }

    double c = 0.0;
    for (double v : xi) c += v;
    dec.c_theta = c / static_cast<double>(np);
    finish(dec, claim, bundle);
    return dec;
}

std::vector<double> orthogonal_claim(const MarketCoefficients& mc,
                                     const std::function<double(double)>& psi,
                                     const PathBundle& bundle) {
    double worst_rho_t = 0.0;
    for (int k = 0; k <= 8; ++k) {
        const CoefficientValues cv = mc.eval({0.0, 0.0, bundle.grid().T * k / 8.0});
        worst_rho_t = std::max(worst_rho_t, std::abs(cv.rho_t));
    }
    if (worst_rho_t < 1e-12)
        throw ConfigError("orthogonal_claim: rho_tilde vanishes, the V-orthogonal direction "
                          "degenerates and no such claim exists");

    std::vector<double> zeta(static_cast<std::size_t>(bundle.n_paths()), 0.0);
    for (long p = 0; p < bundle.n_paths(); ++p) {
        for (int k = 0; k < bundle.grid().n_steps; ++k) {
            const State st{bundle.s_log(p, k), bundle.b_log(p, k), bundle.grid().t(k)};
            const CoefficientValues cv = mc.eval(st);
            const DerivedCoefficients d = derive(cv);
            zeta[static_cast<std::size_t>(p)] +=
                psi(st.t) * (cv.rho_t * bundle.dw1(p, k) + d.sigma_t * bundle.dw2(p, k));
        }
    }
    return zeta;
}

std::vector<double> residual_under_P(const MarketCoefficients& mc, const GridSolution& H,
                                     const MeasureShift& shift, const PathBundle& bundle_P) {
    if (bundle_P.measure_tag() != "P")
        throw ConfigError("residual_under_P: needs a historical-measure bundle");
    const long np = bundle_P.n_paths();
    const double dt = bundle_P.grid().dt();
    std::vector<double> R(static_cast<std::size_t>(np), 0.0);
    for (long p = 0; p < np; ++p) {
        for (int k = 0; k < bundle_P.grid().n_steps; ++k) {
            const State x{bundle_P.s_log(p, k), bundle_P.b_log(p, k), bundle_P.grid().t(k)};
            const Vec2 grad = H.gradient(x.s, x.b, x.t);
            const DerivedCoefficients d = derive(mc, x);
            const Vec2 U = d.V * grad.x + d.V_t * grad.y;
            const Vec2 eta = U - d.V * (U.dot(d.V) / d.V.norm2());
            const Vec2 th = shift.eval(x);
            R[static_cast<std::size_t>(p)] +=
                eta.x * (bundle_P.dw1(p, k) + th.x * dt) +
                eta.y * (bundle_P.dw2(p, k) + th.y * dt);
        }
    }
    return R;
}

double lrm_orthogonality_z(const MarketCoefficients& mc, const GridSolution& H,
                           const MeasureShift& shift, const PathBundle& bundle_P) {
    if (bundle_P.measure_tag() != "P")
        throw ConfigError("lrm_orthogonality_z: needs a historical-measure bundle");
    const long np = bundle_P.n_paths();
    std::vector<double> R = residual_under_P(mc, H, shift, bundle_P);
    std::vector<double> M(static_cast<std::size_t>(np), 0.0);
    for (long p = 0; p < np; ++p) {
        for (int k = 0; k < bundle_P.grid().n_steps; ++k) {
            const double s = bundle_P.s_log(p, k);
            const double b = bundle_P.b_log(p, k);
            const double t = bundle_P.grid().t(k);
            const Vec2 grad = H.gradient(s, b, t);
            const DerivedCoefficients d = derive(mc, {s, b, t});
            const Vec2 U = d.V * grad.x + d.V_t * grad.y;
            const double alpha = U.dot(d.V) / d.V.norm2();
            const Vec2 dW{bundle_P.dw1(p, k), bundle_P.dw2(p, k)};
            // martingale part of the gain: gamma * S~ * V.dW
            M[static_cast<std::size_t>(p)] += alpha * d.V.dot(dW);
        }
    }
    double mr = 0.0, mm = 0.0;
    for (long p = 0; p < np; ++p) {
        mr += R[static_cast<std::size_t>(p)];
        mm += M[static_cast<std::size_t>(p)];
    }
    mr /= np;
    mm /= np;
    std::vector<double> prod(static_cast<std::size_t>(np));
    for (long p = 0; p < np; ++p)
        prod[static_cast<std::size_t>(p)] =
            (R[static_cast<std::size_t>(p)] - mr) * (M[static_cast<std::size_t>(p)] - mm);
    const Estimate cov = mean_se(prod);
    return cov.se > 0.0 ? cov.value / cov.se : 0.0;
}

}  // namespace stochbond
