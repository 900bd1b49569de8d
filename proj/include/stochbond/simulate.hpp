#ifndef STOCHBOND_SIMULATE_HPP
#define STOCHBOND_SIMULATE_HPP

#include <optional>

#include "stochbond/measures.hpp"

namespace stochbond {

struct TimeGrid {
    double T = 1.0;
    int n_steps = 256;

    double dt() const { return T / n_steps; }
    double t(int k) const { return T * k / n_steps; }
};

struct SimOptions {
    bool antithetic = false;
    double s0 = 0.0;  // log(S(0)/B(0))
    double b0 = 0.0;  // log B(0)
};

// Discretized scenarios of (s, b) = (log S~, log B) with the generating
// Brownian increments. S, B, S~ are exposed as exact exponentials of the
// stored logs, so the price-consistency invariants hold by construction.
class PathBundle {
public:
    PathBundle(TimeGrid grid, long n_paths, std::string measure_tag);

    const TimeGrid& grid() const { return grid_; }
    long n_paths() const { return n_paths_; }
    const std::string& measure_tag() const { return tag_; }

    double s_log(long p, int k) const { return s_(p, k); }
    double b_log(long p, int k) const { return b_(p, k); }
    double dw1(long p, int k) const { return dw1_(p, k); }
    double dw2(long p, int k) const { return dw2_(p, k); }

    double S_tilde(long p, int k) const { return std::exp(s_(p, k)); }
    double B(long p, int k) const { return std::exp(b_(p, k)); }
    double S(long p, int k) const { return std::exp(s_(p, k) + b_(p, k)); }

    Array2D& s_matrix() { return s_; }
    Array2D& b_matrix() { return b_; }
    Array2D& dw1_matrix() { return dw1_; }
    Array2D& dw2_matrix() { return dw2_; }

private:
    TimeGrid grid_;
    long n_paths_;
    std::string tag_;
    Array2D s_, b_;      // n_paths x (n_steps+1)
    Array2D dw1_, dw2_;  // n_paths x n_steps
};

// Exact Gaussian stepping for constant coefficients, log-Euler otherwise.
// With a shift, paths are generated directly under the shifted measure
// (drifts reduced by V.theta resp. V_t.theta); the stored increments are the
// Brownian increments of the generating measure.
PathBundle simulate_paths(const MarketCoefficients& mc, const TimeGrid& grid, long n_paths,
                          std::uint64_t seed, const MeasureShift* shift = nullptr,
                          const SimOptions& opt = {});

// Streaming form: block-wise terminal states without storing paths.
// on_step(k, n, s, b, z1sdt, z2sdt, first_path) runs with the state at t_k
// before the step-k increments sqrt(dt)*z are applied;
// on_block(n, s, b, first_path) runs once per block with terminal states.
using StepCallback = std::function<void(int k, std::size_t n, const double* s, const double* b,
                                        const double* dw1, const double* dw2, long first_path)>;
using BlockCallback =
    std::function<void(std::size_t n, const double* s, const double* b, long first_path)>;

void stream_paths(const MarketCoefficients& mc, const TimeGrid& grid, long n_paths,
                  std::uint64_t seed, const MeasureShift* shift, const SimOptions& opt,
                  const StepCallback& on_step, const BlockCallback& on_block);

// Numeraire-invariance check (discounted-wealth route vs direct portfolio
// value); returns the maximum pathwise discrepancy.
double self_financing_check(const PathBundle& bundle, const Array2D& beta, const Array2D& gamma);

// CSV dump: path_id, step, t, w, w_tilde, S, B, S_tilde.
void dump_paths_csv(const PathBundle& bundle, const std::string& path);

}  // namespace stochbond

#endif
