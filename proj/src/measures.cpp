#include "stochbond/measures.hpp"

#include <sstream>

#include "stochbond/rng.hpp"
#include "stochbond/simulate.hpp"

namespace stochbond {

namespace {

std::string fmt_tag(const std::string& rule, double param, bool has_param) {
    std::ostringstream os;
    os << rule;
    if (has_param) os << "(K=" << param << ")";
    return os.str();
}

void assert_member(const Vec2& th, const DerivedCoefficients& d, const char* rule) {
    const double res = std::abs(d.V.dot(th) - d.a_t);
    if (res > 1e-9 * std::max(1.0, std::abs(d.a_t)))
        throw NumericalError(std::string(rule) + ": membership constraint V.theta = a_t violated");
}

}  // namespace

MeasureShift theta_k_family(const MarketCoefficients& mc, double K) {
    MeasureShift shift;
    shift.rule = ShiftRule::k_family;
    shift.K = K;
    shift.state_dependent = !mc.time_only();
    shift.tag = fmt_tag("k_family", K, true);
    shift.theta = [mc, K](const State& st) -> Vec2 {
        const CoefficientValues cv = mc.eval(st);
        const DerivedCoefficients d = derive(cv);
        // determinant of the 2x2 system is sigma_t*rho_t + rho*rho_t = rho_t*sigma
        if (std::abs(cv.rho_t * cv.sigma) < 1e-8)
            throw DegenerateCoefficients("theta_k_family: singular system, |rho_tilde*sigma| < 1e-8");
        const double rhs2 = cv.r - cv.rho * cv.rho - cv.rho_t * cv.rho_t - K;
        const double th1 = (d.a_t + rhs2) / cv.sigma;
        const double th2 = (th1 * d.sigma_t - d.a_t) / cv.rho_t;
        return {th1, th2};
    };
    return shift;
}

MeasureShift theta_bond_consensus(const MarketCoefficients& mc) {
    MeasureShift shift;
    shift.rule = ShiftRule::bond_consensus;
    shift.state_dependent = !mc.time_only();
    shift.tag = "bond_consensus";
    shift.theta = [mc](const State& st) -> Vec2 {
        const CoefficientValues cv = mc.eval(st);
        const DerivedCoefficients d = derive(cv);
        if (std::abs(cv.sigma) < 1e-12 || std::abs(cv.rho_t) < 1e-12)
            throw DegenerateCoefficients("theta_bond_consensus: requires inf|sigma|>0 and inf|rho_tilde|>0");
        const Vec2 th{d.a_t / cv.sigma, -d.a_t * cv.rho / (cv.rho_t * cv.sigma)};
        assert_member(th, d, "theta_bond_consensus");
        if (std::abs(d.V_t.dot(th)) > 1e-9 * std::max(1.0, std::abs(d.a_t)))
            throw NumericalError("theta_bond_consensus: V_t.theta = 0 violated");
        return th;
    };
    return shift;
}

MeasureShift theta_stock_consensus(const MarketCoefficients& mc) {
    MeasureShift shift;
    shift.rule = ShiftRule::stock_consensus;
    shift.state_dependent = !mc.time_only();
    shift.tag = "stock_consensus";
    shift.theta = [mc](const State& st) -> Vec2 {
        const CoefficientValues cv = mc.eval(st);
        const DerivedCoefficients d = derive(cv);
        if (std::abs(cv.sigma) < 1e-12 || std::abs(cv.rho_t) < 1e-12)
            throw DegenerateCoefficients("theta_stock_consensus: requires inf|sigma|>0 and inf|rho_tilde|>0");
        const Vec2 th{0.0, -d.a_t / cv.rho_t};
        assert_member(th, d, "theta_stock_consensus");
        return th;
    };
    return shift;
}

MeasureShift theta_min_norm(const MarketCoefficients& mc) {
    MeasureShift shift;
    shift.rule = ShiftRule::min_norm;
    shift.state_dependent = !mc.time_only();
    shift.tag = "min_norm";
    shift.theta = [mc](const State& st) -> Vec2 {
        const DerivedCoefficients d = derive(mc, st);
        return d.V * (d.a_t / d.V.norm2());
    };
    return shift;
}

MeasureShift theta_cheng(const MarketCoefficients& mc) {
    MeasureShift shift = theta_min_norm(mc);
    shift.rule = ShiftRule::cheng;
    shift.tag = "cheng";
    return shift;
}

MeasureShift make_explicit(const MarketCoefficients& mc, Vec2 theta, bool check) {
    MeasureShift shift;
    shift.rule = ShiftRule::explicit_theta;
    shift.state_dependent = false;
    shift.tag = "explicit";
    shift.theta = [theta](const State&) { return theta; };
    if (check) {
        const double res = membership_residual(shift, mc);
        if (res > 1e-9)
            throw ConfigError("explicit theta is not a member of the martingale family (|V.theta - a_t| = " +
                              std::to_string(res) + ")");
    }
    return shift;
}

double membership_residual(const MeasureShift& shift, const MarketCoefficients& mc, int n_states,
                           std::uint64_t seed) {
    double worst = 0.0;
    for (int i = 0; i < n_states; ++i) {
        State st;
        st.s = -2.0 + 4.0 * rng::uniform(seed, 3 * static_cast<std::uint64_t>(i));
        st.b = -1.0 + 2.0 * rng::uniform(seed, 3 * static_cast<std::uint64_t>(i) + 1);
        st.t = rng::uniform(seed, 3 * static_cast<std::uint64_t>(i) + 2);
        const DerivedCoefficients d = derive(mc, st);
        const Vec2 th = shift.eval(st);
        if (th.norm() > shift.bound)
            throw NumericalError(shift.tag + ": |theta| exceeds bound at sampled state");
        worst = std::max(worst, std::abs(d.V.dot(th) - d.a_t));
    }
    return worst;
}

std::vector<double> density_along(const MeasureShift& shift, const MarketCoefficients& mc,
                                  const PathBundle& bundle) {
    if (bundle.measure_tag() != "P")
        throw ConfigError("density_along: bundle must be generated under the historical measure");
    const int n_steps = bundle.grid().n_steps;
    const double dt = bundle.grid().dt();
    std::vector<double> z(static_cast<std::size_t>(bundle.n_paths()));
    const bool flat = !shift.state_dependent && mc.time_only();

    // time-only shifts: evaluate theta once per step, not once per (path, step)
    std::vector<Vec2> th_flat;
    if (flat) {
        th_flat.resize(static_cast<std::size_t>(n_steps));
        for (int k = 0; k < n_steps; ++k) th_flat[k] = shift.eval({0.0, 0.0, bundle.grid().t(k)});
    }

    for (long p = 0; p < bundle.n_paths(); ++p) {
        double log_z = 0.0;
        for (int k = 0; k < n_steps; ++k) {
            const Vec2 th =
                flat ? th_flat[k]
                     : shift.eval({bundle.s_log(p, k), bundle.b_log(p, k), bundle.grid().t(k)});
            log_z -= th.x * bundle.dw1(p, k) + th.y * bundle.dw2(p, k) + 0.5 * th.norm2() * dt;
        }
        z[static_cast<std::size_t>(p)] = std::exp(log_z);
    }
    return z;
}

ReweightResult reweight(const std::vector<double>& weights, const std::vector<double>& samples) {
    if (weights.size() != samples.size())
        throw ConfigError("reweight: weights/samples length mismatch");
    ReweightResult res;
    std::vector<double> wx(weights.size());
    double wsum = 0.0, w2sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        wx[i] = weights[i] * samples[i];
        wsum += weights[i];
        w2sum += weights[i] * weights[i];
    }
    res.estimate = mean_se(wx);
    res.ess = w2sum > 0.0 ? wsum * wsum / w2sum : 0.0;
    res.ess_warning = res.ess < 0.01 * static_cast<double>(weights.size());
    return res;
}

}  // namespace stochbond
