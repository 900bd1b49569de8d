#ifndef STOCHBOND_DECOMPOSE_HPP
#define STOCHBOND_DECOMPOSE_HPP

#include "stochbond/pde.hpp"

namespace stochbond {

// Pathwise orthogonal decomposition xi = c + int gamma dS~ + R with
// E_theta[eta . dW_theta] orthogonal to the V direction pointwise.
struct Decomposition {
    double c_theta = 0.0;
    Array2D alpha, gamma;       // n_paths x n_steps, value at the left endpoint
    Array2D eta1, eta2;         // integrand of the residual martingale
    std::vector<double> R;      // per-path residual at T
    std::vector<double> I;      // per-path gain int gamma dS~
    std::vector<double> xi;     // per-path discounted payoff
    std::vector<double> recon_error;  // xi - c - I - R
    double f_printed_gap = 0.0;  // mean |(sigma_t H_s - rho_t H_b)/|V| - alpha|
    long extrapolations = 0;
    std::string method;
};

// PDE-gradient route: requires the bundle to be simulated under the same
// shifted measure that H was solved under.
Decomposition decompose_markov(const MarketCoefficients& mc, const Claim& claim,
                               const MeasureShift& shift, const GridSolution& H,
                               const PathBundle& bundle);

// Model-free route: per-step ridge regression of xi * dW/dt on polynomials in
// (s, b) estimates the integrand U, the rest follows pointwise.
Decomposition decompose_regression(const MarketCoefficients& mc, const Claim& claim,
                                   const MeasureShift& shift, const PathBundle& bundle,
                                   int degree = 3, double ridge = 1e-8);

// zeta = int psi(t) [rho_t dW1 + sigma_t dW2]: a claim whose integrand is
// orthogonal to V, so its gain from trading the stock is identically zero.
// Rejects markets with vanishing rho_t, where the orthogonal direction
// collapses.
std::vector<double> orthogonal_claim(const MarketCoefficients& mc,
                                     const std::function<double(double)>& psi,
                                     const PathBundle& bundle);

// R_theta accumulated along historical-measure paths: the integrand eta comes
// from H, the Brownian increments are compensated by theta dt (dW_theta =
// dW + theta dt under P).
std::vector<double> residual_under_P(const MarketCoefficients& mc, const GridSolution& H,
                                     const MeasureShift& shift, const PathBundle& bundle_P);

// Covariance z-score of the residual against the stock's martingale part
// under the historical measure; near zero iff the decomposition is the
// locally risk-minimizing one.
double lrm_orthogonality_z(const MarketCoefficients& mc, const GridSolution& H,
                           const MeasureShift& shift, const PathBundle& bundle_P);

}  // namespace stochbond

#endif
