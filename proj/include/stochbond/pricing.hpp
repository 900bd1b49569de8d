#ifndef STOCHBOND_PRICING_HPP
#define STOCHBOND_PRICING_HPP

#include <optional>

#include "stochbond/simulate.hpp"

namespace stochbond {

// Contingent claim B(T)xi with xi = F(S~(T), B(T)) in discounted units.
// Puts and calls carry the numeraire-adjusted closed forms; custom claims
// supply F directly.
struct Claim {
    enum class Kind { put, call, custom };

    Kind kind = Kind::put;
    double strike = 1.0;
    std::function<double(double S_tilde_T, double B_T)> payoff;  // xi, custom only
    std::string tag = "put";

    // discounted payoff from terminal log coordinates
    double xi(double s_log, double b_log) const {
        const double st = std::exp(s_log);
        switch (kind) {
            case Kind::put: return std::max(strike * std::exp(-b_log) - st, 0.0);
            case Kind::call: return std::max(st - strike * std::exp(-b_log), 0.0);
            case Kind::custom: return payoff(st, std::exp(b_log));
        }
        return 0.0;
    }

    static Claim put(double strike);
    static Claim call(double strike);
    static Claim custom(std::function<double(double, double)> payoff, std::string tag = "custom");
};

struct PriceParams {
    TimeGrid grid;
    long n_paths = 100000;
    std::uint64_t seed = 1;
    bool antithetic = true;
    double s0 = 0.0;
    double b0 = 0.0;
};

struct PriceResult {
    Estimate price;
    std::string measure_tag;
    std::string claim_tag;
    // custom payoffs only: second moment looks unstable across sub-samples
    bool integrability_warning = false;
};

// Monte Carlo price E_theta[xi] by direct simulation under the shifted
// measure. Streams blocks, never materializes the path set. With antithetic
// sampling the standard error is computed over pair averages.
PriceResult price(const MarketCoefficients& mc, const Claim& claim, const MeasureShift& shift,
                  const PriceParams& params);

struct MartingaleReport {
    Estimate stock;          // E_theta S~(T), target S~(0)
    double z_stock = 0.0;
    std::optional<Estimate> bond;  // E_theta e^{KT}/B(T), target 1/B(0)
    double z_bond = 0.0;
    double bond_K = 0.0;
};

// z-scores of the martingale identities that characterize family membership.
// The bond diagnostic is produced for the K-family (with its K) and for
// deterministic-B markets (rho = rho_t = 0, where K = r works for any member).
MartingaleReport martingale_diagnostics(const MarketCoefficients& mc, const MeasureShift& shift,
                                        const PriceParams& params);

}  // namespace stochbond

#endif
