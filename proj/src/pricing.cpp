#include "stochbond/pricing.hpp"

namespace stochbond {

namespace {

// Collapse antithetic pairs before taking mean/SE so the variance reduction
// is actually reflected in the reported error bar.
Estimate reduce(std::vector<double>& samples, bool antithetic) {
    if (antithetic && samples.size() >= 2) {
        std::vector<double> pairs(samples.size() / 2);
        for (std::size_t i = 0; i < pairs.size(); ++i)
            pairs[i] = 0.5 * (samples[2 * i] + samples[2 * i + 1]);
        return mean_se(pairs);
    }
    return mean_se(samples);
}

std::vector<double> sample_terminal(const MarketCoefficients& mc, const MeasureShift* shift,
                                    const PriceParams& params,
                                    const std::function<double(double, double)>& f) {
    std::vector<double> out(static_cast<std::size_t>(params.n_paths));
    SimOptions opt;
    opt.antithetic = params.antithetic;
    opt.s0 = params.s0;
    opt.b0 = params.b0;
    stream_paths(mc, params.grid, params.n_paths, params.seed, shift, opt, nullptr,
                 [&](std::size_t n, const double* s, const double* b, long first) {
                     for (std::size_t i = 0; i < n; ++i)
                         out[static_cast<std::size_t>(first) + i] = f(s[i], b[i]);
                 });
    return out;
}

}  // namespace

Claim Claim::put(double strike) {
    Claim c;
    c.kind = Kind::put;
    c.strike = strike;
    c.tag = "put";
    return c;
}

Claim Claim::call(double strike) {
    Claim c;
    c.kind = Kind::call;
    c.strike = strike;
    c.tag = "call";
    return c;
}

Claim Claim::custom(std::function<double(double, double)> payoff, std::string tag) {
    Claim c;
    c.kind = Kind::custom;
    c.payoff = std::move(payoff);
    c.tag = std::move(tag);
    return c;
}

PriceResult price(const MarketCoefficients& mc, const Claim& claim, const MeasureShift& shift,
                  const PriceParams& params) {
    if (claim.kind == Claim::Kind::custom && !claim.payoff)
        throw ConfigError("price: custom claim without payoff function");

    std::vector<double> xi = sample_terminal(
        mc, &shift, params, [&](double s, double b) { return claim.xi(s, b); });

    PriceResult res;
    res.measure_tag = shift.tag;
    res.claim_tag = claim.tag;
    res.price = reduce(xi, params.antithetic);

    if (claim.kind == Claim::Kind::custom) {
        // crude square-integrability probe: the empirical second moment of a
        // heavy-tailed xi is dominated by a handful of paths
        double m2 = 0.0, m2_head = 0.0, worst = 0.0;
        const std::size_t half = xi.size() / 2;
        for (std::size_t i = 0; i < xi.size(); ++i) {
            const double q = xi[i] * xi[i];
            m2 += q;
            if (i < half) m2_head += q;
            worst = std::max(worst, q);
        }
        if (!std::isfinite(m2) || (m2 > 0.0 && worst > 0.5 * m2))
            res.integrability_warning = true;
        else if (m2_head > 0.0 && std::abs(2.0 * m2_head / m2 - 1.0) > 0.5)
            res.integrability_warning = true;
    }
    return res;
}

MartingaleReport martingale_diagnostics(const MarketCoefficients& mc, const MeasureShift& shift,
                                        const PriceParams& params) {
    MartingaleReport rep;

    std::vector<double> st = sample_terminal(mc, &shift, params,
                                             [](double s, double) { return std::exp(s); });
    rep.stock = reduce(st, params.antithetic);
    rep.z_stock = rep.stock.z_against(std::exp(params.s0));

    bool has_K = false;
    double K = 0.0;
    if (shift.rule == ShiftRule::k_family) {
        has_K = true;
        K = shift.K;
    } else if (mc.all_constant()) {
        const CoefficientValues cv = mc.eval({params.s0, params.b0, 0.0});
        if (cv.rho == 0.0 && cv.rho_t == 0.0) {
            has_K = true;  // B deterministic, e^{rt}/B constant
            K = cv.r;
        }
    }
    if (has_K) {
        const double KT = K * params.grid.T;
        std::vector<double> binv = sample_terminal(
            mc, &shift, params, [KT](double, double b) { return std::exp(KT - b); });
        rep.bond = reduce(binv, params.antithetic);
        rep.z_bond = rep.bond->z_against(std::exp(-params.b0));
        rep.bond_K = K;
    }
    return rep;
}

}  // namespace stochbond
