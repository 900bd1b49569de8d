#include "stochbond/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stochbond/extremes.hpp"
#include "stochbond/rng.hpp"

namespace stochbond {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);  // binary: force LF line endings
    if (!out) throw ConfigError("cannot write " + p.string());
    out << content;
}

struct CommonOpts {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string repro_id;
};

json load_config(const std::string& path, std::string& raw) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    raw = ss.str();
    json j = json::parse(raw, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path);
    return j;
}

Coefficient parse_coefficient(const json& j, const char* name) {
    if (j.is_number()) return Coefficient(j.get<double>());
    if (j.is_object() && j.contains("times") && j.contains("values")) {
        PiecewiseConstant pc;
        pc.times = j.at("times").get<std::vector<double>>();
        pc.values = j.at("values").get<std::vector<double>>();
        if (pc.times.empty() || pc.times.size() != pc.values.size() || pc.times.front() != 0.0)
            throw ConfigError(std::string("coefficient '") + name +
                              "': times/values must be same nonempty length with times[0]=0");
        return Coefficient(std::move(pc));
    }
    throw ConfigError(std::string("coefficient '") + name +
                      "' must be a number or {\"times\":[...],\"values\":[...]}");
}

MarketCoefficients parse_mc(const json& cfg) {
    json c = cfg.value("coefficients", json::object());
    auto get = [&](const char* name, double def) {
        return c.contains(name) ? parse_coefficient(c.at(name), name) : Coefficient(def);
    };
    const double bound = c.value("bound", 10.0);
    return MarketCoefficients(get("a", 0.10), get("sigma", 0.20), get("r", 0.05),
                              get("rho", 0.01), get("rho_tilde", 0.01), bound);
}

Claim parse_claim(const json& cfg) {
    json c = cfg.value("claim", json::object());
    const std::string kind = c.value("kind", std::string("put"));
    const double strike = c.value("strike", 1.0);
    if (kind == "put") return Claim::put(strike);
    if (kind == "call") return Claim::call(strike);
    throw ConfigError("claim.kind must be 'put' or 'call' (custom payoffs are library-only)");
}

MeasureShift parse_measure(const json& cfg, const MarketCoefficients& mc) {
    json m = cfg.value("measure", json::object());
    const std::string rule = m.value("rule", std::string("min_norm"));
    if (rule == "k_family") {
        if (!m.contains("K")) throw ConfigError("measure rule k_family requires \"K\"");
        return theta_k_family(mc, m.at("K").get<double>());
    }
    if (rule == "bond_consensus") return theta_bond_consensus(mc);
    if (rule == "stock_consensus") return theta_stock_consensus(mc);
    if (rule == "min_norm") return theta_min_norm(mc);
    if (rule == "cheng") return theta_cheng(mc);
    if (rule == "explicit") {
        auto th = m.value("theta", std::vector<double>{});
        if (th.size() != 2) throw ConfigError("measure rule explicit requires \"theta\":[t1,t2]");
        return make_explicit(mc, {th[0], th[1]});
    }
    throw ConfigError("unknown measure rule: " + rule);
}

struct Engine {
    long n_paths = 100000;
    int n_steps = 256;
    double T = 1.0;
    bool antithetic = true;
    std::uint64_t seed = 0;
    bool has_seed = false;
    GridSpec grid;
};

Engine parse_engine(const json& cfg, const CommonOpts& opt, long default_paths = 100000) {
    json e = cfg.value("engine", json::object());
    Engine en;
    en.n_paths = e.value("n_paths", default_paths);
    en.n_steps = e.value("n_steps", 256);
    en.T = e.value("T", 1.0);
    en.antithetic = e.value("antithetic", true);
    en.grid.n_s = e.value("n_s", 201);
    en.grid.n_b = e.value("n_b", 101);
    en.grid.n_t = e.value("n_t", en.n_steps);
    if (opt.seed) {
        en.seed = *opt.seed;
        en.has_seed = true;
    } else if (e.contains("seed")) {
        en.seed = e.at("seed").get<std::uint64_t>();
        en.has_seed = true;
    }
    if (en.n_paths < 1 || en.n_steps < 1 || en.T <= 0.0)
        throw ConfigError("engine block: n_paths, n_steps must be >= 1 and T > 0");
    return en;
}

void require_seed(const Engine& en) {
    if (!en.has_seed) throw ConfigError("seed is mandatory (config engine.seed or --seed)");
}

PriceParams to_params(const Engine& en) {
    PriceParams p;
    p.grid = {en.T, en.n_steps};
    p.n_paths = en.n_paths;
    p.seed = en.seed;
    p.antithetic = en.antithetic;
    return p;
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t hash,
                    std::uint64_t seed) {
    std::string s = "{\n  \"command\": \"" + command + "\",\n  \"config_hash\": \"" + hex64(hash) +
                    "\",\n  \"seed\": " + std::to_string(seed) + ",\n  \"version\": \"" + kVersion +
                    "\"\n}\n";
    write_file(dir / "manifest.json", s);
}

std::vector<double> terminal_samples(const MarketCoefficients& mc, const MeasureShift* shift,
                                     const TimeGrid& grid, long n_paths, std::uint64_t seed,
                                     bool antithetic,
                                     const std::function<double(double, double)>& f) {
    std::vector<double> out(static_cast<std::size_t>(n_paths));
    SimOptions opt;
    opt.antithetic = antithetic;
    stream_paths(mc, grid, n_paths, seed, shift, opt, nullptr,
                 [&](std::size_t n, const double* s, const double* b, long first) {
                     for (std::size_t i = 0; i < n; ++i)
                         out[static_cast<std::size_t>(first) + i] = f(s[i], b[i]);
                 });
    return out;
}

double cov_z(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    std::vector<double> prod(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
    const Estimate e = mean_se(prod);
    return e.se > 0.0 ? e.value / e.se : 0.0;
}

// ---- commands -------------------------------------------------------------

void cmd_price(const json& cfg, const CommonOpts& opt, const fs::path& out) {
    const MarketCoefficients mc = parse_mc(cfg);
    const Claim claim = parse_claim(cfg);
    const MeasureShift shift = parse_measure(cfg, mc);
    const Engine en = parse_engine(cfg, opt);
    require_seed(en);
    const PriceResult res = price(mc, claim, shift, to_params(en));
    std::string s = "{\n  \"c_theta\": " + num(res.price.value) + ",\n  \"se\": " +
                    num(res.price.se) + ",\n  \"n_paths\": " + std::to_string(en.n_paths) +
                    ",\n  \"measure\": \"" + res.measure_tag + "\",\n  \"claim\": \"" +
                    res.claim_tag + "\",\n  \"integrability_warning\": " +
                    (res.integrability_warning ? "true" : "false") + "\n}\n";
    write_file(out / "price.json", s);
}

void cmd_hedge(const json& cfg, const CommonOpts& opt, const fs::path& out) {
    const MarketCoefficients mc = parse_mc(cfg);
    const Claim claim = parse_claim(cfg);
    const MeasureShift shift = parse_measure(cfg, mc);
    const Engine en = parse_engine(cfg, opt, 20000);
    require_seed(en);
    if (en.n_paths > 200000) throw ConfigError("hedge: n_paths too large for stored bundles");
    const std::string method = cfg.value("method", std::string("markov"));

    const TimeGrid grid{en.T, en.n_steps};
    SimOptions so;
    so.antithetic = en.antithetic;
    const PathBundle bundle = simulate_paths(mc, grid, en.n_paths, en.seed, &shift, so);

    Decomposition dec;
    if (method == "markov") {
        GridSpec gs = en.grid;
        gs.n_t = en.n_steps;
        const GridSolution H = solve_H(mc, shift, claim, gs, en.T);
        dec = decompose_markov(mc, claim, shift, H, bundle);
    } else if (method == "regression") {
        dec = decompose_regression(mc, claim, shift, bundle);
    } else {
        throw ConfigError("hedge: method must be 'markov' or 'regression'");
    }

    // beta from the self-financing identity: X~ = c + int gamma dS~,
    // beta = X~ - gamma S~
    std::string csv = "t,mean_gamma,mean_beta\n";
    const std::size_t np = static_cast<std::size_t>(bundle.n_paths());
    std::vector<double> xtil(np, dec.c_theta);
    for (int k = 0; k < en.n_steps; ++k) {
        double mg = 0.0, mb = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
            const double g = dec.gamma(p, static_cast<std::size_t>(k));
            mg += g;
            mb += xtil[p] - g * bundle.S_tilde(static_cast<long>(p), k);
            xtil[p] += g * (bundle.S_tilde(static_cast<long>(p), k + 1) -
                            bundle.S_tilde(static_cast<long>(p), k));
        }
        csv += num(grid.t(k)) + "," + num(mg / static_cast<double>(np)) + "," +
               num(mb / static_cast<double>(np)) + "\n";
    }
    write_file(out / "hedge.csv", csv);

    std::vector<double> r2(np);
    for (std::size_t p = 0; p < np; ++p) r2[p] = dec.R[p] * dec.R[p];
    const Estimate er2 = mean_se(r2);
    const double z = cov_z(dec.R, dec.I);
    std::string s = "{\n  \"c_theta\": " + num(dec.c_theta) + ",\n  \"E_R2\": " + num(er2.value) +
                    ",\n  \"E_R2_se\": " + num(er2.se) + ",\n  \"corr_R_I_z\": " + num(z) +
                    ",\n  \"method\": \"" + dec.method + "\"\n}\n";
    write_file(out / "hedge.json", s);
}

std::string sweep_csv(const SweepResult& res, Claim::Kind kind, long n_paths) {
    std::string csv = "K,estimate,se,bound,ess\n";
    for (const SweepPoint& pt : res.points) {
        // the bound column carries the theorem-relevant side: for the put the
        // e^{-KT} ceiling at K>=0 and the divergence floor at K<0; mirrored
        // for the call
        double bound = 0.0;
        if (kind == Claim::Kind::put)
            bound = pt.K >= 0.0 ? pt.bound_upper : pt.bound_lower;
        else if (kind == Claim::Kind::call)
            bound = pt.K >= 0.0 ? pt.bound_lower : pt.bound_upper;
        csv += num(pt.K) + "," + num(pt.price.value) + "," + num(pt.price.se) + "," + num(bound) +
               "," + std::to_string(n_paths) + "\n";
    }
    return csv;
}

void cmd_sweep(const json& cfg, const CommonOpts& opt, const fs::path& out) {
    const MarketCoefficients mc = parse_mc(cfg);
    const Claim claim = parse_claim(cfg);
    const Engine en = parse_engine(cfg, opt);
    require_seed(en);
    if (!cfg.contains("K_list")) throw ConfigError("sweep requires \"K_list\"");
    const std::vector<double> K_list = cfg.at("K_list").get<std::vector<double>>();
    const SweepResult res = price_sweep(mc, claim, K_list, to_params(en));
    write_file(out / "sweep.csv", sweep_csv(res, claim.kind, en.n_paths));
}

void cmd_error_moment(const json& cfg, const CommonOpts& opt, const fs::path& out) {
    const MarketCoefficients mc = parse_mc(cfg);
    const Claim claim = parse_claim(cfg);
    const MeasureShift shift = parse_measure(cfg, mc);
    const Engine en = parse_engine(cfg, opt, 5000);
    require_seed(en);
    const std::string construction = cfg.value("construction", std::string("inflate"));
    if (!cfg.contains("K_list")) throw ConfigError("error-moment requires \"K_list\"");
    const std::vector<double> K_list = cfg.at("K_list").get<std::vector<double>>();

    GridSpec gs = en.grid;
    gs.n_t = en.n_steps;
    const GridSolution H = solve_H(mc, shift, claim, gs, en.T);

    std::string csv = "K,estimate,se,bound,ess\n";
    std::string diag = "[\n";
    bool first = true;
    for (double K : K_list) {
        ErrorMomentEstimate est;
        if (construction == "inflate")
            est = inflate_error(mc, claim, shift, H, K, to_params(en));
        else if (construction == "deflate")
            est = deflate_error(mc, claim, shift, H, K, to_params(en));
        else
            throw ConfigError("construction must be 'inflate' or 'deflate'");
        // bound column = K=0 baseline, the reference level the theorems move
        csv += num(K) + "," + num(est.second_moment.value) + "," + num(est.second_moment.se) +
               "," + num(est.baseline.value) + "," + std::to_string(en.n_paths) + "\n";
        diag += std::string(first ? "" : ",\n") + "  {\"K\": " + num(K) +
                ", \"construction\": \"" + est.construction +
                "\", \"c_theta\": " + num(est.c_theta) +
                ", \"stop_frequency\": " + num(est.stop_frequency) +
                ", \"guard_hits\": " + std::to_string(est.guard_hits) +
                ", \"hypothesis_warning\": " + (est.hypothesis_warning ? "true" : "false") + "}";
        first = false;
    }
    diag += "\n]\n";
    write_file(out / "error_moment.csv", csv);
    write_file(out / "error_moment.json", diag);
}

void cmd_pde_solve(const json& cfg, const CommonOpts& opt, const fs::path& out) {
    const MarketCoefficients mc = parse_mc(cfg);
    const Claim claim = parse_claim(cfg);
    const MeasureShift shift = parse_measure(cfg, mc);
    const Engine en = parse_engine(cfg, opt);
    const GridSolution H = solve_H(mc, shift, claim, en.grid, en.T);
    std::string s = "{\n  \"H0\": " + num(H.value(0.0, 0.0, 0.0)) +
                    ",\n  \"n_s\": " + std::to_string(H.s_nodes().size()) +
                    ",\n  \"n_b\": " + std::to_string(H.b_nodes().size()) +
                    ",\n  \"n_t\": " + std::to_string(H.n_t()) + ",\n  \"s_min\": " +
                    num(H.s_nodes().front()) + ",\n  \"s_max\": " + num(H.s_nodes().back()) +
                    ",\n  \"b_min\": " + num(H.b_nodes().front()) + ",\n  \"b_max\": " +
                    num(H.b_nodes().back()) + "\n}\n";
    write_file(out / "pde.json", s);

    if (cfg.contains("slice_times")) {
        int idx = 0;
        for (double t : cfg.at("slice_times").get<std::vector<double>>()) {
            std::string csv = "# n_s=" + std::to_string(H.s_nodes().size()) +
                              ",n_b=" + std::to_string(H.b_nodes().size()) +
                              ",s_min=" + num(H.s_nodes().front()) +
                              ",s_max=" + num(H.s_nodes().back()) +
                              ",b_min=" + num(H.b_nodes().front()) +
                              ",b_max=" + num(H.b_nodes().back()) + ",t=" + num(t) + "\n";
            csv += "s,b,H\n";
            for (double s_node : H.s_nodes())
                for (double b_node : H.b_nodes())
                    csv += num(s_node) + "," + num(b_node) + "," +
                           num(H.value(s_node, b_node, t)) + "\n";
            write_file(out / ("pde_slice_" + std::to_string(idx++) + ".csv"), csv);
        }
    }
}

void cmd_validate(const json& cfg, const CommonOpts&, const fs::path& out) {
    const MarketCoefficients mc = parse_mc(cfg);
    const bool k_req = cfg.value("k_family_requested", false) ||
                       cfg.value("measure", json::object()).value("rule", std::string()) ==
                           "k_family";
    const ValidationReport rep = validate(mc, {}, k_req);
    std::string s = "{\n  \"ok\": " + std::string(rep.ok() ? "true" : "false") +
                    ",\n  \"violations\": [";
    bool first = true;
    for (const Violation& v : rep.violations) {
        s += std::string(first ? "\n" : ",\n") + "    {\"invariant\": \"" + v.invariant +
             "\", \"detail\": \"" + v.detail + "\", \"s\": " + num(v.at.s) +
             ", \"b\": " + num(v.at.b) + ", \"t\": " + num(v.at.t) + "}";
        first = false;
    }
    s += std::string(rep.violations.empty() ? "" : "\n  ") + "]\n}\n";
    write_file(out / "validate.json", s);
}

// ---- canned reproductions -------------------------------------------------

MarketCoefficients repro_mc() { return make_constant_coefficients(0.10, 0.20, 0.05, 0.01, 0.01); }

void repro_bs_limit(const fs::path& out, std::uint64_t seed) {
    const MarketCoefficients mc = make_constant_coefficients(0.10, 0.20, 0.0, 0.0, 0.0);
    const Claim claim = Claim::put(1.0);
    const MeasureShift shift = theta_min_norm(mc);
    PriceParams pp;
    pp.seed = seed;
    const PriceResult res = price(mc, claim, shift, pp);
    const GridSolution H = solve_H(mc, shift, claim, GridSpec{}, 1.0);
    const double ref = 2.0 * norm_cdf(0.1) - 1.0;
    std::string s = "{\n  \"price\": " + num(res.price.value) + ",\n  \"se\": " +
                    num(res.price.se) + ",\n  \"pde_price\": " + num(H.value(0.0, 0.0, 0.0)) +
                    ",\n  \"reference\": " + num(ref) +
                    ",\n  \"n_paths\": " + std::to_string(pp.n_paths) + "\n}\n";
    write_file(out / "bs_limit.json", s);
}

void repro_sweep(const fs::path& out, std::uint64_t seed, bool call) {
    const MarketCoefficients mc = repro_mc();
    const Claim claim = call ? Claim::call(1.0) : Claim::put(1.0);
    const std::vector<double> K_list =
        call ? std::vector<double>{1.0, 2.0, 5.0, -2.0, -5.0}
             : std::vector<double>{1.0, 2.0, 5.0, -1.0, -2.0, -5.0};
    PriceParams pp;
    pp.seed = seed;
    const SweepResult res = price_sweep(mc, claim, K_list, pp);
    write_file(out / (call ? "thm4_2.csv" : "thm4_1.csv"),
               sweep_csv(res, claim.kind, pp.n_paths));
}

void repro_error(const fs::path& out, std::uint64_t seed, bool inflate) {
    const MarketCoefficients mc = repro_mc();
    const Claim claim = Claim::put(1.0);
    const MeasureShift shift = theta_min_norm(mc);
    const GridSolution H = solve_H(mc, shift, claim, GridSpec{}, 1.0);
    PriceParams pp;
    pp.n_paths = 5000;
    pp.seed = seed;
    const std::vector<double> K_list =
        inflate ? std::vector<double>{1.0, 2.0, 5.0, 10.0} : std::vector<double>{1.0, 10.0, 100.0};
    std::string csv = "K,estimate,se,bound,ess\n";
    for (double K : K_list) {
        const ErrorMomentEstimate est = inflate ? inflate_error(mc, claim, shift, H, K, pp)
                                                : deflate_error(mc, claim, shift, H, K, pp);
        csv += num(K) + "," + num(est.second_moment.value) + "," + num(est.second_moment.se) +
               "," + num(est.baseline.value) + "," + std::to_string(pp.n_paths) + "\n";
    }
    write_file(out / (inflate ? "thm4_3.csv" : "thm4_4.csv"), csv);
}

void repro_consensus(const fs::path& out, std::uint64_t seed, bool stock) {
    const MarketCoefficients mc = repro_mc();
    const MeasureShift shift = stock ? theta_stock_consensus(mc) : theta_bond_consensus(mc);
    const TimeGrid grid{1.0, 256};
    auto f = stock ? std::function<double(double, double)>([](double s, double b) { return s + b; })
                   : std::function<double(double, double)>([](double, double b) { return b; });
    const std::vector<double> x_th = terminal_samples(mc, &shift, grid, 100000, seed, false, f);
    const std::vector<double> x_p = terminal_samples(mc, nullptr, grid, 100000, seed + 1, false, f);
    const Estimate m_th = mean_se(x_th), m_p = mean_se(x_p);
    auto var_est = [](const std::vector<double>& x, double mean) {
        std::vector<double> sq(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - mean) * (x[i] - mean);
        return mean_se(sq);
    };
    const Estimate v_th = var_est(x_th, m_th.value), v_p = var_est(x_p, m_p.value);
    const double z_mean =
        (m_th.value - m_p.value) / std::sqrt(m_th.se * m_th.se + m_p.se * m_p.se);
    const double z_var = (v_th.value - v_p.value) / std::sqrt(v_th.se * v_th.se + v_p.se * v_p.se);
    std::string s = std::string("{\n  \"variable\": \"") + (stock ? "log_S_T" : "log_B_T") +
                    "\",\n  \"mean_shifted\": " + num(m_th.value) +
                    ",\n  \"mean_historical\": " + num(m_p.value) +
                    ",\n  \"var_shifted\": " + num(v_th.value) +
                    ",\n  \"var_historical\": " + num(v_p.value) + ",\n  \"z_mean\": " +
                    num(z_mean) + ",\n  \"z_var\": " + num(z_var) + "\n}\n";
    write_file(out / (stock ? "thm5_2.json" : "thm5_1.json"), s);
}

void repro_min_norm(const fs::path& out, std::uint64_t seed) {
    const MarketCoefficients mc = repro_mc();
    const MeasureShift shift = theta_min_norm(mc);

    // 1000 random feasible alternatives theta' = theta + u * Vperp
    double min_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
        State st;
        st.s = -0.5 + rng::uniform(seed, 4 * static_cast<std::uint64_t>(i));
        st.b = -0.3 + 0.6 * rng::uniform(seed, 4 * static_cast<std::uint64_t>(i) + 1);
        st.t = rng::uniform(seed, 4 * static_cast<std::uint64_t>(i) + 2);
        const DerivedCoefficients d = derive(mc, st);
        const Vec2 th = shift.eval(st);
        double u = -5.0 + 10.0 * rng::uniform(seed, 4 * static_cast<std::uint64_t>(i) + 3);
        if (u == 0.0) u = 1.0;
        const Vec2 vperp{-d.V.y, d.V.x};
        const Vec2 alt = th + vperp * u;
        min_margin = std::min(min_margin, alt.norm() - th.norm());
    }

    const Claim claim = Claim::put(1.0);
    const GridSolution H = solve_H(mc, shift, claim, GridSpec{}, 1.0);
    const TimeGrid grid{1.0, 256};
    const PathBundle bundle = simulate_paths(mc, grid, 20000, seed + 7);
    const double z = lrm_orthogonality_z(mc, H, shift, bundle);
    std::string s = "{\n  \"min_norm_margin\": " + num(min_margin) +
                    ",\n  \"lrm_orthogonality_z\": " + num(z) + "\n}\n";
    write_file(out / "thm5_3.json", s);
}

void repro_replicability(const fs::path& out, std::uint64_t seed, bool complete_market) {
    // thm3.1: claim depending on S~(T) only, deterministic coefficients;
    // thm3.2: rho_tilde = 0 (complete market), plain call
    const MarketCoefficients mc = complete_market
                                      ? make_constant_coefficients(0.10, 0.20, 0.05, 0.01, 0.0)
                                      : repro_mc();
    const Claim claim = complete_market
                            ? Claim::call(0.8)
                            : Claim::custom(
                                  [](double st, double) { return std::max(1.0 - st, 0.0); },
                                  "discounted_put");
    const MeasureShift shift = theta_min_norm(mc);

    std::string rows;
    double xi2 = 0.0;
    bool first = true;
    for (int n_steps : {64, 128, 256}) {
        const TimeGrid grid{1.0, n_steps};
        GridSpec gs;
        gs.n_t = n_steps;
        const GridSolution H = solve_H(mc, shift, claim, gs, 1.0);
        const PathBundle bundle = simulate_paths(mc, grid, 20000, seed, &shift);
        const Decomposition dec = decompose_markov(mc, claim, shift, H, bundle);
        std::vector<double> rep2(dec.recon_error.size()), r2(dec.R.size());
        for (std::size_t p = 0; p < rep2.size(); ++p) {
            rep2[p] = dec.recon_error[p] * dec.recon_error[p];
            r2[p] = dec.R[p] * dec.R[p];
        }
        const Estimate e_rep = mean_se(rep2), e_r = mean_se(r2);
        if (n_steps == 256) {
            std::vector<double> x2(dec.xi.size());
            for (std::size_t p = 0; p < x2.size(); ++p) x2[p] = dec.xi[p] * dec.xi[p];
            xi2 = mean_se(x2).value;
        }
        rows += std::string(first ? "" : ",\n") + "    {\"n_steps\": " + std::to_string(n_steps) +
                ", \"replication_error2\": " + num(e_rep.value) + ", \"se\": " + num(e_rep.se) +
                ", \"residual2\": " + num(e_r.value) + "}";
        first = false;
    }
    std::string s = "{\n  \"claim\": \"" + claim.tag + "\",\n  \"refinements\": [\n" + rows +
                    "\n  ],\n  \"xi_second_moment\": " + num(xi2) + "\n}\n";
    write_file(out / (complete_market ? "thm3_2.json" : "thm3_1.json"), s);
}

void cmd_repro(const std::string& id, const CommonOpts& opt, const fs::path& out) {
    std::uint64_t seed = 0;
    std::string target = id;
    if (id == "bs-limit") seed = 42;
    else if (id == "thm4.1") seed = 4100;
    else if (id == "thm4.2") seed = 4200;
    else if (id == "thm4.3") seed = 4300;
    else if (id == "thm4.4") seed = 4400;
    else if (id == "thm5.1") seed = 5100;
    else if (id == "thm5.2") seed = 5200;
    else if (id == "thm5.3") seed = 5300;
    else if (id == "thm3.1") seed = 3100;
    else if (id == "thm3.2") seed = 3200;
    else throw ConfigError("unknown repro id: " + id);
    if (opt.seed) seed = *opt.seed;

    if (id == "bs-limit") repro_bs_limit(out, seed);
    else if (id == "thm4.1") repro_sweep(out, seed, false);
    else if (id == "thm4.2") repro_sweep(out, seed, true);
    else if (id == "thm4.3") repro_error(out, seed, true);
    else if (id == "thm4.4") repro_error(out, seed, false);
    else if (id == "thm5.1") repro_consensus(out, seed, false);
    else if (id == "thm5.2") repro_consensus(out, seed, true);
    else if (id == "thm5.3") repro_min_norm(out, seed);
    else if (id == "thm3.1") repro_replicability(out, seed, false);
    else if (id == "thm3.2") repro_replicability(out, seed, true);
    write_manifest(out, "repro " + target, fnv1a64(target), seed);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.push_back("stochbond");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (std::string& s : full) argv.push_back(s.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, char** argv) {
    CLI::App app{"pricing and hedging laboratory for the two-factor bond-deviation market"};
    app.require_subcommand(1);

    CommonOpts opt;
    std::uint64_t seed_val = 0;
    bool seed_set = false;

    const std::vector<std::string> cmds = {"price",     "hedge",    "sweep", "error-moment",
                                           "pde-solve", "validate", "repro"};
    for (const std::string& name : cmds) {
        CLI::App* sub = app.add_subcommand(name);
        if (name == "repro") {
            sub->add_option("id", opt.repro_id, "experiment id (thm4.1 ... bs-limit)")
                ->required();
        } else {
            sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
        }
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", seed_val, "seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--threads", opt.threads, "worker threads")
            ->envname("STOCHBOND_THREADS");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    if (seed_set) opt.seed = seed_val;
    if (opt.threads < 1) {
        std::cerr << "error: --threads must be >= 1\n";
        return 1;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        fs::path out(opt.out);
        fs::create_directories(out);
        if (cmd == "repro") {
            cmd_repro(opt.repro_id, opt, out);
            return 0;
        }
        std::string raw;
        const json cfg = load_config(opt.config, raw);
        const std::uint64_t hash = fnv1a64(raw);
        Engine en = parse_engine(cfg, opt);
        if (cmd == "price") cmd_price(cfg, opt, out);
        else if (cmd == "hedge") cmd_hedge(cfg, opt, out);
        else if (cmd == "sweep") cmd_sweep(cfg, opt, out);
        else if (cmd == "error-moment") cmd_error_moment(cfg, opt, out);
        else if (cmd == "pde-solve") cmd_pde_solve(cfg, opt, out);
        else if (cmd == "validate") cmd_validate(cfg, opt, out);
        write_manifest(out, cmd, hash, en.has_seed ? en.seed : 0);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace stochbond
