#ifndef STOCHBOND_MEASURES_HPP
#define STOCHBOND_MEASURES_HPP

#include <functional>

#include "stochbond/coefficients.hpp"

namespace stochbond {

class PathBundle;

enum class ShiftRule { explicit_theta, k_family, bond_consensus, stock_consensus, min_norm, cheng };

// A member of the martingale-measure index set: theta(s,b,t) with
// V.theta == a_tilde pointwise, plus the Girsanov machinery around it.
struct MeasureShift {
    ShiftRule rule = ShiftRule::explicit_theta;
    std::function<Vec2(const State&)> theta;
    double bound = 50.0;
    double K = 0.0;  // k_family drift level, meaningful for that rule only
    // false when theta depends on t only; enables the vectorized stepping path
    bool state_dependent = false;
    std::string tag = "explicit";

    Vec2 eval(const State& st) const { return theta(st); }
};

// theta solving  theta1*sigma_t - theta2*rho_t = a_t,
//                theta1*rho     + theta2*rho_t = r - rho^2 - rho_t^2 - K,
// which makes e^{Kt}/B(t) a martingale under the shifted measure.
MeasureShift theta_k_family(const MarketCoefficients& mc, double K);

// The unique member with V_t.theta == 0: bond dynamics keep their historical
// coefficients under the shifted measure.
MeasureShift theta_bond_consensus(const MarketCoefficients& mc);

// The unique member with theta1 == 0: the stock keeps drift a against the
// shifted first Brownian coordinate.
MeasureShift theta_stock_consensus(const MarketCoefficients& mc);

// Pointwise least-norm member a_t*V/|V|^2 (local risk minimization).
MeasureShift theta_min_norm(const MarketCoefficients& mc);

// Alias of theta_min_norm, valid for non-random coefficients.
MeasureShift theta_cheng(const MarketCoefficients& mc);

// Constant theta; membership is asserted at sampled states unless check=false
// (the unchecked form exists for negative-control experiments).
MeasureShift make_explicit(const MarketCoefficients& mc, Vec2 theta, bool check = true);

// Max |V.theta - a_t| over states sampled from the bundle-relevant region.
double membership_residual(const MeasureShift& shift, const MarketCoefficients& mc,
                           int n_states = 1000, std::uint64_t seed = 17);

// Per-path Girsanov density Z_theta(T) along a historical-measure bundle.
std::vector<double> density_along(const MeasureShift& shift, const MarketCoefficients& mc,
                                  const PathBundle& bundle);

struct ReweightResult {
    Estimate estimate;
    double ess = 0.0;
    bool ess_warning = false;  // ESS below 1% of n
};

// Importance-sampling expectation sum(Z_i x_i)/n with standard error.
ReweightResult reweight(const std::vector<double>& weights, const std::vector<double>& samples);

}  // namespace stochbond

#endif
