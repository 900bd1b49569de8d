#ifndef STOCHBOND_COEFFICIENTS_HPP
#define STOCHBOND_COEFFICIENTS_HPP

#include <optional>
#include <variant>

#include "stochbond/common.hpp"

namespace stochbond {

// Bilinear table on a rectangular (s, b) grid, one per time slab in Markov mode.
struct Table2D {
    std::vector<double> s_nodes;
    std::vector<double> b_nodes;
    Array2D values;  // s_nodes.size() x b_nodes.size()

    double eval(double s, double b) const;
};

// Piecewise-constant function of time: value[i] on [times[i], times[i+1]).
struct PiecewiseConstant {
    std::vector<double> times;  // left endpoints, times[0] == 0
    std::vector<double> values;

    double eval(double t) const;
};

// Markov-mode coefficient: one bilinear table per time slab.
struct TabulatedField {
    std::vector<double> slab_times;  // left endpoints, slab_times[0] == 0
    std::vector<Table2D> slabs;

    double eval(double s, double b, double t) const;
};

// One market coefficient: constant, piecewise-constant in t, or tabulated in (s,b,t).
class Coefficient {
public:
    Coefficient() = default;
    Coefficient(double c) : impl_(c) {}
    Coefficient(PiecewiseConstant pc) : impl_(std::move(pc)) {}
    Coefficient(TabulatedField tf) : impl_(std::move(tf)) {}

    double eval(double s, double b, double t) const;
    bool is_constant() const { return std::holds_alternative<double>(impl_); }
    bool is_time_only() const { return !std::holds_alternative<TabulatedField>(impl_); }

private:
    std::variant<double, PiecewiseConstant, TabulatedField> impl_{0.0};
};

struct State {
    double s = 0.0;  // log discounted stock price
    double b = 0.0;  // log bond price
    double t = 0.0;
};

// a-tilde, sigma-tilde and the two loading vectors evaluated at one state.
struct DerivedCoefficients {
    double a_t = 0.0;      // a - r + rho^2 - sigma*rho - rho_t^2
    double sigma_t = 0.0;  // sigma - rho
    Vec2 V;                // (sigma_t, -rho_t)
    Vec2 V_t;              // (rho, rho_t)
};

struct CoefficientValues {
    double a, sigma, r, rho, rho_t;
};

class MarketCoefficients {
public:
    MarketCoefficients() = default;
    MarketCoefficients(Coefficient a, Coefficient sigma, Coefficient r, Coefficient rho,
                       Coefficient rho_t, double bound = 10.0)
        : a_(std::move(a)), sigma_(std::move(sigma)), r_(std::move(r)), rho_(std::move(rho)),
          rho_t_(std::move(rho_t)), bound_(bound) {}

    CoefficientValues eval(const State& st) const {
        return {a_.eval(st.s, st.b, st.t), sigma_.eval(st.s, st.b, st.t), r_.eval(st.s, st.b, st.t),
                rho_.eval(st.s, st.b, st.t), rho_t_.eval(st.s, st.b, st.t)};
    }

    bool all_constant() const {
        return a_.is_constant() && sigma_.is_constant() && r_.is_constant() && rho_.is_constant() &&
               rho_t_.is_constant();
    }
    bool time_only() const {
        return a_.is_time_only() && sigma_.is_time_only() && r_.is_time_only() &&
               rho_.is_time_only() && rho_t_.is_time_only();
    }
    double bound() const { return bound_; }

private:
    Coefficient a_{0.0}, sigma_{0.0}, r_{0.0}, rho_{0.0}, rho_t_{0.0};
    double bound_ = 10.0;
};

// Convenience constructor for the all-constant case.
MarketCoefficients make_constant_coefficients(double a, double sigma, double r, double rho,
                                              double rho_t, double bound = 10.0);

DerivedCoefficients derive(const MarketCoefficients& mc, const State& st);
DerivedCoefficients derive(const CoefficientValues& cv);

struct Violation {
    std::string invariant;
    State at;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Sampling domain for the black-box invariant checks.
struct ValidationDomain {
    double s_min = -2.0, s_max = 2.0;
    double b_min = -1.0, b_max = 1.0;
    double horizon = 1.0;
    int n_samples_per_axis = 9;
};

ValidationReport validate(const MarketCoefficients& mc, const ValidationDomain& dom = {},
                          bool k_family_requested = false);

}  // namespace stochbond

#endif
