#ifndef STOCHBOND_PDE_HPP
#define STOCHBOND_PDE_HPP

#include "stochbond/pricing.hpp"

namespace stochbond {

struct GridSpec {
    int n_s = 201;
    int n_b = 101;
    int n_t = 256;
    double width_sigmas = 6.0;
    double min_half_width = 0.05;
};

// Backward parabolic solution on a rectangular (s, b) x time grid with
// bilinear space interpolation and linear time interpolation. Gradient
// fields are centered differences, one-sided at the boundary.
class GridSolution {
public:
    GridSolution(std::vector<double> s_nodes, std::vector<double> b_nodes, double T, int n_t);

    double value(double s, double b, double t) const;
    Vec2 gradient(double s, double b, double t) const;  // (d/ds, d/db)

    double node_value(int kt, int is, int ib) const { return values_[kt][idx(is, ib)]; }
    double node_grad_s(int kt, int is, int ib) const { return grad_s_[kt][idx(is, ib)]; }
    double node_grad_b(int kt, int is, int ib) const { return grad_b_[kt][idx(is, ib)]; }

    const std::vector<double>& s_nodes() const { return s_nodes_; }
    const std::vector<double>& b_nodes() const { return b_nodes_; }
    int n_t() const { return n_t_; }
    double T() const { return T_; }
    double min_value() const;
    double max_value() const;

    // paths interpolated outside [s_min,s_max]x[b_min,b_max] are clamped;
    // the counter backs the grid-extrapolation warning
    long extrapolation_count() const { return extrapolations_; }

    std::vector<std::vector<double>>& slices() { return values_; }
    void finalize_gradients();

private:
    std::size_t idx(int is, int ib) const { return static_cast<std::size_t>(is) * n_b_ + ib; }
    friend class Parabolic2DSolver;

    std::vector<double> s_nodes_, b_nodes_;
    double T_;
    int n_t_;
    std::size_t n_b_;
    std::vector<std::vector<double>> values_;  // (n_t+1) slices of n_s*n_b
    std::vector<std::vector<double>> grad_s_, grad_b_;
    mutable long extrapolations_ = 0;
};

// Feynman-Kac solve of the pricing equation under the shifted measure:
// drift of s collapses to -sigma_t^2/2 - rho_t^2/2 via the membership
// constraint, drift of b is r - rho^2/2 - rho_t^2/2 - V_t.theta, diffusion
// from the two independent Brownian loadings (cross coefficient
// sigma_t*rho - rho_t^2). Terminal slice is F(e^s, e^b) exactly at nodes.
GridSolution solve_H(const MarketCoefficients& mc, const MeasureShift& shift, const Claim& claim,
                     const GridSpec& spec, double T, double s0 = 0.0, double b0 = 0.0);

// E R_theta^2 under the historical measure via the x^2-reduction of the
// Kolmogorov equation: J(x,s,b,t) = x^2 + 2x m + n with m, n solving 2-D
// problems sourced by A = g.theta and |g|^2 (+ cross-gradient terms).
struct ErrorMomentSolution {
    double value = 0.0;           // E R^2 = n(s0, b0, 0)
    double m_at_origin = 0.0;     // 0 when theta is orthogonal to g
};

ErrorMomentSolution error_moment_pde(const MarketCoefficients& mc, const MeasureShift& shift,
                                     const GridSolution& H, double s0 = 0.0, double b0 = 0.0);

// Node ranges sized to cover drift displacement plus width_sigmas diffusion
// widths around (s0, b0); shared by solve_H and the error-moment solves.
std::vector<double> make_axis(double x0, double drift_lo, double drift_hi, double vol, double T,
                              int n, double width_sigmas, double min_half_width);

}  // namespace stochbond

#endif
