#include "stochbond/pde.hpp"

#include <algorithm>

namespace stochbond {

namespace {

struct NodeCoeffs {
    double mu_s = 0.0, mu_b = 0.0;
    double c_ss = 0.0, c_sb = 0.0, c_bb = 0.0;  // full second-moment rates
    double src = 0.0;
};

using CoeffFn = std::function<NodeCoeffs(int kt, int i, int j, double s, double b, double t)>;

void thomas(std::vector<double>& lo, std::vector<double>& di, std::vector<double>& up,
            std::vector<double>& rhs, std::vector<double>& out) {
    const std::size_t n = di.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lo[i] / di[i - 1];
        di[i] -= w * up[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    out[n - 1] = rhs[n - 1] / di[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) out[i] = (rhs[i] - up[i] * out[i + 1]) / di[i];
}

}  // namespace

GridSolution::GridSolution(std::vector<double> s_nodes, std::vector<double> b_nodes, double T,
                           int n_t)
    : s_nodes_(std::move(s_nodes)), b_nodes_(std::move(b_nodes)), T_(T), n_t_(n_t),
      n_b_(b_nodes_.size()) {
    values_.assign(static_cast<std::size_t>(n_t_) + 1,
                   std::vector<double>(s_nodes_.size() * n_b_, 0.0));
}

void GridSolution::finalize_gradients() {
    const int ns = static_cast<int>(s_nodes_.size());
    const int nb = static_cast<int>(n_b_);
    const double ds = s_nodes_[1] - s_nodes_[0];
    const double db = b_nodes_[1] - b_nodes_[0];
    grad_s_.assign(values_.size(), std::vector<double>(values_[0].size()));
    grad_b_.assign(values_.size(), std::vector<double>(values_[0].size()));
    for (std::size_t kt = 0; kt < values_.size(); ++kt) {
        const std::vector<double>& v = values_[kt];
        for (int i = 0; i < ns; ++i) {
            for (int j = 0; j < nb; ++j) {
                const std::size_t c = idx(i, j);
                if (i == 0)
                    grad_s_[kt][c] = (v[idx(1, j)] - v[idx(0, j)]) / ds;
                else if (i == ns - 1)
                    grad_s_[kt][c] = (v[idx(ns - 1, j)] - v[idx(ns - 2, j)]) / ds;
                else
                    grad_s_[kt][c] = (v[idx(i + 1, j)] - v[idx(i - 1, j)]) / (2.0 * ds);
                if (j == 0)
                    grad_b_[kt][c] = (v[idx(i, 1)] - v[idx(i, 0)]) / db;
                else if (j == nb - 1)
                    grad_b_[kt][c] = (v[idx(i, nb - 1)] - v[idx(i, nb - 2)]) / db;
                else
                    grad_b_[kt][c] = (v[idx(i, j + 1)] - v[idx(i, j - 1)]) / (2.0 * db);
            }
        }
    }
}

namespace {

// shared bilinear-in-space, linear-in-time lookup
struct Locator {
    int is, ib, kt;
    double ws, wb, wt;
    bool clamped;
};

Locator locate(const std::vector<double>& sn, const std::vector<double>& bn, double T, int n_t,
               double s, double b, double t) {
    Locator L{};
    const double ds = sn[1] - sn[0];
    const double db = bn[1] - bn[0];
    double sc = s, bc = b;
    L.clamped = false;
    if (sc < sn.front() || sc > sn.back()) {
        L.clamped = true;
        sc = std::clamp(sc, sn.front(), sn.back());
    }
    if (bc < bn.front() || bc > bn.back()) {
        L.clamped = true;
        bc = std::clamp(bc, bn.front(), bn.back());
    }
    L.is = std::clamp(static_cast<int>((sc - sn.front()) / ds), 0,
                      static_cast<int>(sn.size()) - 2);
    L.ib = std::clamp(static_cast<int>((bc - bn.front()) / db), 0,
                      static_cast<int>(bn.size()) - 2);
    L.ws = (sc - sn[L.is]) / ds;
    L.wb = (bc - bn[L.ib]) / db;
    const double dtg = T / n_t;
    const double tc = std::clamp(t, 0.0, T);
    L.kt = std::clamp(static_cast<int>(tc / dtg), 0, n_t - 1);
    L.wt = tc / dtg - L.kt;
    return L;
}

}  // namespace

double GridSolution::value(double s, double b, double t) const {
    const Locator L = locate(s_nodes_, b_nodes_, T_, n_t_, s, b, t);
    if (L.clamped) ++extrapolations_;
    auto bilin = [&](const std::vector<double>& v) {
        const double v00 = v[idx(L.is, L.ib)], v10 = v[idx(L.is + 1, L.ib)];
        const double v01 = v[idx(L.is, L.ib + 1)], v11 = v[idx(L.is + 1, L.ib + 1)];
        return (1 - L.ws) * ((1 - L.wb) * v00 + L.wb * v01) +
               L.ws * ((1 - L.wb) * v10 + L.wb * v11);
    };
    return (1 - L.wt) * bilin(values_[L.kt]) + L.wt * bilin(values_[L.kt + 1]);
}

Vec2 GridSolution::gradient(double s, double b, double t) const {
    if (grad_s_.empty()) throw NumericalError("GridSolution: gradients not finalized");
    const Locator L = locate(s_nodes_, b_nodes_, T_, n_t_, s, b, t);
    if (L.clamped) ++extrapolations_;
    auto bilin = [&](const std::vector<std::vector<double>>& field) {
        const std::vector<double>& v0 = field[L.kt];
        const std::vector<double>& v1 = field[L.kt + 1];
        auto one = [&](const std::vector<double>& v) {
            return (1 - L.ws) * ((1 - L.wb) * v[idx(L.is, L.ib)] + L.wb * v[idx(L.is, L.ib + 1)]) +
                   L.ws * ((1 - L.wb) * v[idx(L.is + 1, L.ib)] +
                           L.wb * v[idx(L.is + 1, L.ib + 1)]);
        };
        return (1 - L.wt) * one(v0) + L.wt * one(v1);
    };
    return {bilin(grad_s_), bilin(grad_b_)};
}

double GridSolution::min_value() const {
    double m = values_[0][0];
    for (const auto& sl : values_)
        for (double v : sl) m = std::min(m, v);
    return m;
}

double GridSolution::max_value() const {
    double m = values_[0][0];
    for (const auto& sl : values_)
        for (double v : sl) m = std::max(m, v);
    return m;
}

std::vector<double> make_axis(double x0, double drift_lo, double drift_hi, double vol, double T,
                              int n, double width_sigmas, double min_half_width) {
    if (n < 3) throw ConfigError("make_axis: need at least 3 nodes");
    const double w = std::max(width_sigmas * vol * std::sqrt(T), min_half_width);
    const double lo = x0 + std::min(0.0, drift_lo * T) - w;
    const double hi = x0 + std::max(0.0, drift_hi * T) + w;
    std::vector<double> nodes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) nodes[i] = lo + (hi - lo) * i / (n - 1);
    return nodes;
}

namespace {

// Douglas ADI, backward in time: explicit predictor carries the cross term
// and the source, the two implicit half-corrections factor the s and b
// operators. Boundary rows impose zero second derivative with one-sided
// convection, which keeps the systems tridiagonal.
void solve_backward(GridSolution& sol, const CoeffFn& coeff,
                    const std::function<double(double, double)>& terminal) {
    const std::vector<double>& sn = sol.s_nodes();
    const std::vector<double>& bn = sol.b_nodes();
    const int ns = static_cast<int>(sn.size());
    const int nb = static_cast<int>(bn.size());
    const int n_t = sol.n_t();
    const double dt = sol.T() / n_t;
    const double ds = sn[1] - sn[0];
    const double db = bn[1] - bn[0];
    const std::size_t nn = static_cast<std::size_t>(ns) * nb;
    auto at = [nb](int i, int j) { return static_cast<std::size_t>(i) * nb + j; };

    std::vector<std::vector<double>>& slices = sol.slices();
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nb; ++j) slices[n_t][at(i, j)] = terminal(sn[i], bn[j]);

    std::vector<NodeCoeffs> c(nn);
    std::vector<double> Ls(nn), Lb(nn), y0(nn), y1(nn);
    std::vector<double> tlo(std::max(ns, nb)), tdi(std::max(ns, nb)), tup(std::max(ns, nb)),
        trhs(std::max(ns, nb)), tout(std::max(ns, nb));

    for (int kt = n_t - 1; kt >= 0; --kt) {
        const double t = sol.T() * kt / n_t;
        const std::vector<double>& H1 = slices[kt + 1];

        for (int i = 0; i < ns; ++i)
            for (int j = 0; j < nb; ++j) c[at(i, j)] = coeff(kt, i, j, sn[i], bn[j], t);

        for (int i = 0; i < ns; ++i) {
            for (int j = 0; j < nb; ++j) {
                const std::size_t q = at(i, j);
                const NodeCoeffs& nc = c[q];
                // directional operators on the known slice
                if (i == 0)
                    Ls[q] = nc.mu_s * (H1[at(1, j)] - H1[at(0, j)]) / ds;
                else if (i == ns - 1)
                    Ls[q] = nc.mu_s * (H1[at(ns - 1, j)] - H1[at(ns - 2, j)]) / ds;
                else
                    Ls[q] = nc.mu_s * (H1[at(i + 1, j)] - H1[at(i - 1, j)]) / (2.0 * ds) +
                            0.5 * nc.c_ss *
                                (H1[at(i + 1, j)] - 2.0 * H1[q] + H1[at(i - 1, j)]) / (ds * ds);
                if (j == 0)
                    Lb[q] = nc.mu_b * (H1[at(i, 1)] - H1[at(i, 0)]) / db;
                else if (j == nb - 1)
                    Lb[q] = nc.mu_b * (H1[at(i, nb - 1)] - H1[at(i, nb - 2)]) / db;
                else
                    Lb[q] = nc.mu_b * (H1[at(i, j + 1)] - H1[at(i, j - 1)]) / (2.0 * db) +
                            0.5 * nc.c_bb *
                                (H1[at(i, j + 1)] - 2.0 * H1[q] + H1[at(i, j - 1)]) / (db * db);
                double cross = 0.0;
                if (i > 0 && i < ns - 1 && j > 0 && j < nb - 1)
                    cross = nc.c_sb *
                            (H1[at(i + 1, j + 1)] - H1[at(i + 1, j - 1)] - H1[at(i - 1, j + 1)] +
                             H1[at(i - 1, j - 1)]) /
                            (4.0 * ds * db);
                y0[q] = H1[q] + dt * (Ls[q] + Lb[q] + cross + nc.src);
            }
        }

        // implicit correction in s, line by line over j
        for (int j = 0; j < nb; ++j) {
            for (int i = 0; i < ns; ++i) {
                const NodeCoeffs& nc = c[at(i, j)];
                double lo = 0.0, di = 0.0, up = 0.0;
                if (i == 0) {
                    di = -nc.mu_s / ds;
                    up = nc.mu_s / ds;
                } else if (i == ns - 1) {
                    lo = -nc.mu_s / ds;
                    di = nc.mu_s / ds;
                } else {
                    const double a = 0.5 * nc.c_ss / (ds * ds);
                    const double m = nc.mu_s / (2.0 * ds);
                    lo = a - m;
                    di = -2.0 * a;
                    up = a + m;
                }
                tlo[i] = -0.5 * dt * lo;
                tdi[i] = 1.0 - 0.5 * dt * di;
                tup[i] = -0.5 * dt * up;
                trhs[i] = y0[at(i, j)] - 0.5 * dt * Ls[at(i, j)];
            }
            std::vector<double> lo2(tlo.begin(), tlo.begin() + ns),
                di2(tdi.begin(), tdi.begin() + ns), up2(tup.begin(), tup.begin() + ns),
                rhs2(trhs.begin(), trhs.begin() + ns), out2(static_cast<std::size_t>(ns));
            thomas(lo2, di2, up2, rhs2, out2);
            for (int i = 0; i < ns; ++i) y1[at(i, j)] = out2[i];
        }

        // implicit correction in b, line by line over i
        std::vector<double>& H0 = slices[kt];
        for (int i = 0; i < ns; ++i) {
            for (int j = 0; j < nb; ++j) {
                const NodeCoeffs& nc = c[at(i, j)];
                double lo = 0.0, di = 0.0, up = 0.0;
                if (j == 0) {
                    di = -nc.mu_b / db;
                    up = nc.mu_b / db;
                } else if (j == nb - 1) {
                    lo = -nc.mu_b / db;
                    di = nc.mu_b / db;
                } else {
                    const double a = 0.5 * nc.c_bb / (db * db);
                    const double m = nc.mu_b / (2.0 * db);
                    lo = a - m;
                    di = -2.0 * a;
                    up = a + m;
                }
                tlo[j] = -0.5 * dt * lo;
                tdi[j] = 1.0 - 0.5 * dt * di;
                tup[j] = -0.5 * dt * up;
                trhs[j] = y1[at(i, j)] - 0.5 * dt * Lb[at(i, j)];
            }
            std::vector<double> lo2(tlo.begin(), tlo.begin() + nb),
                di2(tdi.begin(), tdi.begin() + nb), up2(tup.begin(), tup.begin() + nb),
                rhs2(trhs.begin(), trhs.begin() + nb), out2(static_cast<std::size_t>(nb));
            thomas(lo2, di2, up2, rhs2, out2);
            for (int j = 0; j < nb; ++j) H0[at(i, j)] = out2[j];
        }
    }
}

struct DomainStats {
    double mu_s_lo = 0.0, mu_s_hi = 0.0, mu_b_lo = 0.0, mu_b_hi = 0.0;
    double vol_s = 0.0, vol_b = 0.0;
};

DomainStats scan_domain(const MarketCoefficients& mc, const MeasureShift* shift, double s0,
                        double b0, double T) {
    DomainStats st;
    bool first = true;
    for (int k = 0; k <= 8; ++k) {
        const State x{s0, b0, T * k / 8.0};
        const CoefficientValues cv = mc.eval(x);
        const DerivedCoefficients d = derive(cv);
        double mu_s = d.a_t - 0.5 * d.sigma_t * d.sigma_t - 0.5 * cv.rho_t * cv.rho_t;
        double mu_b = cv.r - 0.5 * cv.rho * cv.rho - 0.5 * cv.rho_t * cv.rho_t;
        if (shift) {
            const Vec2 th = shift->eval(x);
            mu_s -= d.V.dot(th);
            mu_b -= d.V_t.dot(th);
        }
        const double vs = std::sqrt(d.sigma_t * d.sigma_t + cv.rho_t * cv.rho_t);
        const double vb = std::sqrt(cv.rho * cv.rho + cv.rho_t * cv.rho_t);
        if (first) {
            st = {mu_s, mu_s, mu_b, mu_b, vs, vb};
            first = false;
        } else {
            st.mu_s_lo = std::min(st.mu_s_lo, mu_s);
            st.mu_s_hi = std::max(st.mu_s_hi, mu_s);
            st.mu_b_lo = std::min(st.mu_b_lo, mu_b);
            st.mu_b_hi = std::max(st.mu_b_hi, mu_b);
            st.vol_s = std::max(st.vol_s, vs);
            st.vol_b = std::max(st.vol_b, vb);
        }
    }
    return st;
}

}  // namespace

GridSolution solve_H(const MarketCoefficients& mc, const MeasureShift& shift, const Claim& claim,
                     const GridSpec& spec, double T, double s0, double b0) {
    if (spec.n_s < 3 || spec.n_b < 3 || spec.n_t < 1) throw ConfigError("solve_H: bad grid spec");
    const DomainStats st = scan_domain(mc, &shift, s0, b0, T);
    GridSolution sol(make_axis(s0, st.mu_s_lo, st.mu_s_hi, st.vol_s, T, spec.n_s,
                               spec.width_sigmas, spec.min_half_width),
                     make_axis(b0, st.mu_b_lo, st.mu_b_hi, st.vol_b, T, spec.n_b,
                               spec.width_sigmas, spec.min_half_width),
                     T, spec.n_t);

    CoeffFn coeff = [&](int, int, int, double s, double b, double t) {
        const State x{s, b, t};
        const CoefficientValues cv = mc.eval(x);
        const DerivedCoefficients d = derive(cv);
        const Vec2 th = shift.eval(x);
        NodeCoeffs nc;
        nc.mu_s = d.a_t - 0.5 * d.sigma_t * d.sigma_t - 0.5 * cv.rho_t * cv.rho_t - d.V.dot(th);
        nc.mu_b = cv.r - 0.5 * cv.rho * cv.rho - 0.5 * cv.rho_t * cv.rho_t - d.V_t.dot(th);
        nc.c_ss = d.sigma_t * d.sigma_t + cv.rho_t * cv.rho_t;
        nc.c_sb = d.sigma_t * cv.rho - cv.rho_t * cv.rho_t;
        nc.c_bb = cv.rho * cv.rho + cv.rho_t * cv.rho_t;
        return nc;
    };
    solve_backward(sol, coeff, [&](double s, double b) { return claim.xi(s, b); });
    sol.finalize_gradients();
    return sol;
}

ErrorMomentSolution error_moment_pde(const MarketCoefficients& mc, const MeasureShift& shift,
                                     const GridSolution& H, double s0, double b0) {
    const double T = H.T();
    const int n_t = H.n_t();

    // integrand data at a node: orthogonal gradient component g and its
    // projection against the shift
    auto node_g = [&](int kt, int i, int j, double s, double b, double t) {
        const State x{s, b, t};
        const CoefficientValues cv = mc.eval(x);
        const DerivedCoefficients d = derive(cv);
        const Vec2 U = d.V * H.node_grad_s(kt, i, j) + d.V_t * H.node_grad_b(kt, i, j);
        const double alpha = U.dot(d.V) / d.V.norm2();
        const Vec2 g = U - d.V * alpha;
        return std::pair<Vec2, DerivedCoefficients>{g, d};
    };

    auto p_drift = [&](const CoefficientValues& cv, const DerivedCoefficients& d, NodeCoeffs& nc) {
        nc.mu_s = d.a_t - 0.5 * d.sigma_t * d.sigma_t - 0.5 * cv.rho_t * cv.rho_t;
        nc.mu_b = cv.r - 0.5 * cv.rho * cv.rho - 0.5 * cv.rho_t * cv.rho_t;
        nc.c_ss = d.sigma_t * d.sigma_t + cv.rho_t * cv.rho_t;
        nc.c_sb = d.sigma_t * cv.rho - cv.rho_t * cv.rho_t;
        nc.c_bb = cv.rho * cv.rho + cv.rho_t * cv.rho_t;
    };

    GridSolution m(H.s_nodes(), H.b_nodes(), T, n_t);
    CoeffFn m_coeff = [&](int kt, int i, int j, double s, double b, double t) {
        const auto [g, d] = node_g(kt, i, j, s, b, t);
        const CoefficientValues cv = mc.eval({s, b, t});
        NodeCoeffs nc;
        p_drift(cv, d, nc);
        nc.src = g.dot(shift.eval({s, b, t}));
        return nc;
    };
    solve_backward(m, m_coeff, [](double, double) { return 0.0; });
    m.finalize_gradients();

    GridSolution n(H.s_nodes(), H.b_nodes(), T, n_t);
    CoeffFn n_coeff = [&](int kt, int i, int j, double s, double b, double t) {
        const auto [g, d] = node_g(kt, i, j, s, b, t);
        const CoefficientValues cv = mc.eval({s, b, t});
        NodeCoeffs nc;
        p_drift(cv, d, nc);
        const double A = g.dot(shift.eval({s, b, t}));
        nc.src = g.norm2() + 2.0 * A * m.node_value(kt, i, j) +
                 2.0 * g.dot(d.V) * m.node_grad_s(kt, i, j) +
                 2.0 * g.dot(d.V_t) * m.node_grad_b(kt, i, j);
        return nc;
    };
    solve_backward(n, n_coeff, [](double, double) { return 0.0; });

    ErrorMomentSolution out;
    out.value = n.value(s0, b0, 0.0);
    out.m_at_origin = m.value(s0, b0, 0.0);
    return out;
}

}  // namespace stochbond
