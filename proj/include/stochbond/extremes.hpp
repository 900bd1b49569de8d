#ifndef STOCHBOND_EXTREMES_HPP
#define STOCHBOND_EXTREMES_HPP

#include "stochbond/decompose.hpp"

namespace stochbond {

struct SweepPoint {
    double K = 0.0;
    Estimate price;
    double bound_lower = 0.0;  // -inf replaced by 0 for put/call (prices are >= 0)
    double bound_upper = 0.0;
    bool bound_violated = false;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::string claim_tag;
};

// Price of the claim under theta_K across a list of K values, each point
// checked against the closed-form envelope bounds that drive the
// price-indeterminacy results (put: -> K~/B(0) as K -> +inf and -> 0 as
// K -> -inf; call: -> S~(0) resp. its lower hull).
SweepResult price_sweep(const MarketCoefficients& mc, const Claim& claim,
                        const std::vector<double>& K_list, const PriceParams& params);

struct ErrorMomentEstimate {
    double K = 0.0;
    Estimate second_moment;  // E_Q R_theta^2 under the constructed Q
    Estimate baseline;       // same functional at K = 0
    double c_theta = 0.0;    // price under theta, unchanged by the construction
    std::string construction;
    double stop_frequency = 0.0;   // deflation: fraction of paths hitting T_K
    long guard_hits = 0;           // deflation: steps where the divisor guard fired
    bool hypothesis_warning = false;  // inflation: eta nearly vanishes on many paths
};

// Error inflation: simulate under dW_theta = dW_Q + K sign(eta) dt, pushing
// the residual's Q-mean drift up linearly in K while the price E_theta xi is
// pinned by membership of theta.
ErrorMomentEstimate inflate_error(const MarketCoefficients& mc, const Claim& claim,
                                  const MeasureShift& shift, const GridSolution& H, double K,
                                  const PriceParams& params);

// Error deflation: an Ornstein-Uhlenbeck feedback q orthogonal to V damps the
// residual until the budget int y^2 dt reaches K, after which the
// perturbation switches off.
ErrorMomentEstimate deflate_error(const MarketCoefficients& mc, const Claim& claim,
                                  const MeasureShift& shift, const GridSolution& H, double K,
                                  const PriceParams& params);

}  // namespace stochbond

#endif
