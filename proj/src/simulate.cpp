#include "stochbond/simulate.hpp"

#include <fstream>

#include "stochbond/kernels/kernels.hpp"
#include "stochbond/rng.hpp"

namespace stochbond {

namespace {

constexpr std::size_t kBlock = 4096;

struct StepCoeffs {
    double mu_s, mu_b;
    double cs1, cs2, cb1, cb2;  // loadings on the raw Brownian increments
};

StepCoeffs step_coeffs(const CoefficientValues& cv, const DerivedCoefficients& d,
                       const MeasureShift* shift, const State& st) {
    StepCoeffs c;
    c.mu_s = d.a_t - 0.5 * d.sigma_t * d.sigma_t - 0.5 * cv.rho_t * cv.rho_t;
    c.mu_b = cv.r - 0.5 * cv.rho * cv.rho - 0.5 * cv.rho_t * cv.rho_t;
    if (shift) {
        const Vec2 th = shift->eval(st);
        c.mu_s -= d.V.dot(th);
        c.mu_b -= d.V_t.dot(th);
    }
    c.cs1 = d.sigma_t;
    c.cs2 = -cv.rho_t;
    c.cb1 = cv.rho;
    c.cb2 = cv.rho_t;
    return c;
}

}  // namespace

PathBundle::PathBundle(TimeGrid grid, long n_paths, std::string measure_tag)
    : grid_(grid), n_paths_(n_paths), tag_(std::move(measure_tag)),
      s_(static_cast<std::size_t>(n_paths), static_cast<std::size_t>(grid.n_steps) + 1),
      b_(static_cast<std::size_t>(n_paths), static_cast<std::size_t>(grid.n_steps) + 1),
      dw1_(static_cast<std::size_t>(n_paths), static_cast<std::size_t>(grid.n_steps)),
      dw2_(static_cast<std::size_t>(n_paths), static_cast<std::size_t>(grid.n_steps)) {}

void stream_paths(const MarketCoefficients& mc, const TimeGrid& grid, long n_paths,
                  std::uint64_t seed, const MeasureShift* shift, const SimOptions& opt,
                  const StepCallback& on_step, const BlockCallback& on_block) {
    if (n_paths < 1) throw ConfigError("simulate: n_paths must be >= 1");
    if (grid.n_steps < 1 || grid.T <= 0.0) throw ConfigError("simulate: invalid time grid");

    const double dt = grid.dt();
    const double sdt = std::sqrt(dt);
    const bool kernel_path = mc.time_only() && (!shift || !shift->state_dependent);
    const auto& ops = kernels::active();

    std::vector<double> s(kBlock), b(kBlock), z1(kBlock), z2(kBlock);

    for (long first = 0; first < n_paths; first += static_cast<long>(kBlock)) {
        const std::size_t n = static_cast<std::size_t>(
            std::min<long>(static_cast<long>(kBlock), n_paths - first));
        std::fill_n(s.data(), n, opt.s0);
        std::fill_n(b.data(), n, opt.b0);

        for (int k = 0; k < grid.n_steps; ++k) {
            const double t = grid.t(k);
            for (std::size_t i = 0; i < n; ++i) {
                const long p = first + static_cast<long>(i);
                const std::uint64_t base = opt.antithetic ? static_cast<std::uint64_t>(p / 2)
                                                          : static_cast<std::uint64_t>(p);
                const double sign = (opt.antithetic && (p & 1)) ? -1.0 : 1.0;
                const rng::NormalPair np =
                    rng::normal_pair(seed, base, static_cast<std::uint64_t>(k));
                z1[i] = sign * np.z1 * sdt;
                z2[i] = sign * np.z2 * sdt;
            }
            if (on_step) on_step(k, n, s.data(), b.data(), z1.data(), z2.data(), first);

            if (kernel_path) {
                const State st{opt.s0, opt.b0, t};
                const CoefficientValues cv = mc.eval(st);
                const StepCoeffs c = step_coeffs(cv, derive(mc, st), shift, st);
                ops.step_const(n, s.data(), b.data(), z1.data(), z2.data(), c.mu_s * dt, c.cs1,
                               c.cs2, c.mu_b * dt, c.cb1, c.cb2);
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    const State st{s[i], b[i], t};
                    const CoefficientValues cv = mc.eval(st);
                    const StepCoeffs c = step_coeffs(cv, derive(mc, st), shift, st);
                    s[i] += c.mu_s * dt + c.cs1 * z1[i] + c.cs2 * z2[i];
                    b[i] += c.mu_b * dt + c.cb1 * z1[i] + c.cb2 * z2[i];
                }
            }
        }
        if (on_block) on_block(n, s.data(), b.data(), first);
    }
}

PathBundle simulate_paths(const MarketCoefficients& mc, const TimeGrid& grid, long n_paths,
                          std::uint64_t seed, const MeasureShift* shift, const SimOptions& opt) {
    PathBundle bundle(grid, n_paths, shift ? shift->tag : "P");
    stream_paths(
        mc, grid, n_paths, seed, shift, opt,
        [&](int k, std::size_t n, const double* s, const double* b, const double* dw1,
            const double* dw2, long first) {
            for (std::size_t i = 0; i < n; ++i) {
                const long p = first + static_cast<long>(i);
                bundle.s_matrix()(p, k) = s[i];
                bundle.b_matrix()(p, k) = b[i];
                bundle.dw1_matrix()(p, k) = dw1[i];
                bundle.dw2_matrix()(p, k) = dw2[i];
            }
        },
        [&](std::size_t n, const double* s, const double* b, long first) {
            const int kT = grid.n_steps;
            for (std::size_t i = 0; i < n; ++i) {
                const long p = first + static_cast<long>(i);
                bundle.s_matrix()(p, kT) = s[i];
                bundle.b_matrix()(p, kT) = b[i];
            }
        });
    return bundle;
}

double self_financing_check(const PathBundle& bundle, const Array2D& beta, const Array2D& gamma) {
    const std::size_t np = static_cast<std::size_t>(bundle.n_paths());
    const std::size_t nc = static_cast<std::size_t>(bundle.grid().n_steps) + 1;
    if (beta.rows() != np || beta.cols() != nc || gamma.rows() != np || gamma.cols() != nc)
        throw ConfigError("self_financing_check: beta/gamma shape mismatch");

    double worst = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        const long lp = static_cast<long>(p);
        double x_disc =
            (beta(p, 0) * bundle.B(lp, 0) + gamma(p, 0) * bundle.S(lp, 0)) / bundle.B(lp, 0);
        for (std::size_t k = 0; k < nc; ++k) {
            const int ik = static_cast<int>(k);
            const double direct =
                beta(p, k) * bundle.B(lp, ik) + gamma(p, k) * bundle.S(lp, ik);
            worst = std::max(worst, std::abs(direct - bundle.B(lp, ik) * x_disc));
            if (k + 1 < nc)
                x_disc += gamma(p, k) * (bundle.S_tilde(lp, ik + 1) - bundle.S_tilde(lp, ik));
        }
    }
    return worst;
}

void dump_paths_csv(const PathBundle& bundle, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open path dump file: " + path);
    out << "path_id,step,t,w,w_tilde,S,B,S_tilde\n";
    char line[256];
    for (long p = 0; p < bundle.n_paths(); ++p) {
        double w = 0.0, wt = 0.0;
        for (int k = 0; k <= bundle.grid().n_steps; ++k) {
            std::snprintf(line, sizeof(line), "%ld,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p, k,
                          bundle.grid().t(k), w, wt, bundle.S(p, k), bundle.B(p, k),
                          bundle.S_tilde(p, k));
            out << line;
            if (k < bundle.grid().n_steps) {
                w += bundle.dw1(p, k);
                wt += bundle.dw2(p, k);
            }
        }
    }
}

}  // namespace stochbond
