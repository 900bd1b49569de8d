#include "stochbond/coefficients.hpp"

#include <algorithm>
#include <sstream>

namespace stochbond {

namespace {

std::size_t slab_index(const std::vector<double>& times, double t) {
    // last i with times[i] <= t
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    return static_cast<std::size_t>(it - times.begin()) - 1;
}

double clamped_weight(const std::vector<double>& nodes, double x, std::size_t& i0) {
    if (x <= nodes.front()) {
        i0 = 0;
        return 0.0;
    }
    if (x >= nodes.back()) {
        i0 = nodes.size() - 2;
        return 1.0;
    }
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    i0 = static_cast<std::size_t>(it - nodes.begin()) - 1;
    return (x - nodes[i0]) / (nodes[i0 + 1] - nodes[i0]);
}

}  // namespace

double Table2D::eval(double s, double b) const {
    std::size_t i = 0, j = 0;
    const double ws = clamped_weight(s_nodes, s, i);
    const double wb = clamped_weight(b_nodes, b, j);
    const double v00 = values(i, j), v01 = values(i, j + 1);
    const double v10 = values(i + 1, j), v11 = values(i + 1, j + 1);
    return (1.0 - ws) * ((1.0 - wb) * v00 + wb * v01) + ws * ((1.0 - wb) * v10 + wb * v11);
}

double PiecewiseConstant::eval(double t) const { return values[slab_index(times, t)]; }

double TabulatedField::eval(double s, double b, double t) const {
    return slabs[slab_index(slab_times, t)].eval(s, b);
}

double Coefficient::eval(double s, double b, double t) const {
    if (const double* c = std::get_if<double>(&impl_)) return *c;
    if (const PiecewiseConstant* pc = std::get_if<PiecewiseConstant>(&impl_)) return pc->eval(t);
    return std::get<TabulatedField>(impl_).eval(s, b, t);
}

MarketCoefficients make_constant_coefficients(double a, double sigma, double r, double rho,
                                              double rho_t, double bound) {
    return MarketCoefficients(Coefficient(a), Coefficient(sigma), Coefficient(r), Coefficient(rho),
                              Coefficient(rho_t), bound);
}

DerivedCoefficients derive(const CoefficientValues& cv) {
    DerivedCoefficients d;
    d.sigma_t = cv.sigma - cv.rho;
    d.a_t = cv.a - cv.r + cv.rho * cv.rho - cv.sigma * cv.rho - cv.rho_t * cv.rho_t;
    d.V = {d.sigma_t, -cv.rho_t};
    d.V_t = {cv.rho, cv.rho_t};
    return d;
}

DerivedCoefficients derive(const MarketCoefficients& mc, const State& st) {
    DerivedCoefficients d = derive(mc.eval(st));
    if (d.V.norm2() == 0.0) {
        std::ostringstream os;
        os << "degenerate coefficients: |V| = 0 at (s=" << st.s << ", b=" << st.b << ", t=" << st.t
           << ")";
        throw DegenerateCoefficients(os.str());
    }
    return d;
}

ValidationReport validate(const MarketCoefficients& mc, const ValidationDomain& dom,
                          bool k_family_requested) {
    ValidationReport rep;
    const int n = std::max(2, dom.n_samples_per_axis);

    double min_abs_sigma_t = std::numeric_limits<double>::infinity();
    double min_abs_rho_t = std::numeric_limits<double>::infinity();
    double min_abs_det = std::numeric_limits<double>::infinity();
    State where_sigma_t{}, where_rho_t{}, where_det{};

    for (int it = 0; it < n; ++it) {
        for (int is = 0; is < n; ++is) {
            for (int ib = 0; ib < n; ++ib) {
                State st;
                st.t = dom.horizon * it / (n - 1);
                st.s = dom.s_min + (dom.s_max - dom.s_min) * is / (n - 1);
                st.b = dom.b_min + (dom.b_max - dom.b_min) * ib / (n - 1);
                const CoefficientValues cv = mc.eval(st);
                const DerivedCoefficients d = derive(cv);

                const double vals[] = {cv.a, cv.sigma, cv.r, cv.rho, cv.rho_t};
                const char* names[] = {"a", "sigma", "r", "rho", "rho_tilde"};
                for (int k = 0; k < 5; ++k) {
                    if (!std::isfinite(vals[k]) || std::abs(vals[k]) > mc.bound()) {
                        std::ostringstream os;
                        os << names[k] << " = " << vals[k] << " exceeds bound " << mc.bound();
                        rep.violations.push_back({"boundedness", st, os.str()});
                    }
                }

                if (std::abs(d.sigma_t) < min_abs_sigma_t) {
                    min_abs_sigma_t = std::abs(d.sigma_t);
                    where_sigma_t = st;
                }
                if (std::abs(cv.rho_t) < min_abs_rho_t) {
                    min_abs_rho_t = std::abs(cv.rho_t);
                    where_rho_t = st;
                }
                const double det = d.sigma_t * cv.rho_t + cv.rho * cv.rho_t;
                if (std::abs(det) < min_abs_det) {
                    min_abs_det = std::abs(det);
                    where_det = st;
                }
            }
        }
    }

    constexpr double kEps = 1e-12;
    if (min_abs_sigma_t <= kEps && min_abs_rho_t <= kEps) {
        rep.violations.push_back(
            {"nondegeneracy", min_abs_sigma_t < min_abs_rho_t ? where_sigma_t : where_rho_t,
             "both |sigma - rho| and |rho_tilde| vanish on the sampled domain"});
    }
    if (k_family_requested && min_abs_det <= 1e-8) {
        rep.violations.push_back({"k_family_determinant", where_det,
                                  "|sigma_t*rho_t + rho*rho_t| not bounded away from 0"});
    }
    return rep;
}

Estimate mean_se(const std::vector<double>& samples) {
    Estimate e;
    e.n = static_cast<long>(samples.size());
    if (e.n == 0) return e;
    double sum = 0.0;
    for (double x : samples) sum += x;
    e.value = sum / static_cast<double>(e.n);
    if (e.n > 1) {
        double ss = 0.0;
        for (double x : samples) {
            const double d = x - e.value;
            ss += d * d;
        }
        e.se = std::sqrt(ss / (static_cast<double>(e.n) * (static_cast<double>(e.n) - 1.0)));
    }
    return e;
}

}  // namespace stochbond
