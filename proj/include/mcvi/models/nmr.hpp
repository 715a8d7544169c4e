#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcvi/distributions.hpp"
#include "mcvi/math.hpp"
#include "mcvi/mcmc.hpp"
#include "mcvi/rng.hpp"
#include "mcvi/trace.hpp"
#include "mcvi/wavelet.hpp"

namespace mcvi::nmr {

inline double lorentzian(double x, double gamma) {
    return (2.0 / kPi) * gamma / (4.0 * x * x + gamma * gamma);
}

struct Component {
    double offset;
    double weight;
};

struct Multiplet {
    double center;
    double protons;
    std::vector<Component> comps;
};

struct Metabolite {
    std::string name;
    std::vector<Multiplet> multiplets;
};

using Catalog = std::vector<Metabolite>;

struct Spectrum {
    std::vector<double> ppm;
    std::vector<double> y;
};

struct Config {
    double a = 1e-9;
    double e = 1e-6;
    double c_shrink = 0.05;
    double d_shrink = 1e-8;
    double h = -0.002;
    double r = 1e5;
    double s_beta = 1e-3;
    double delta_prior_var = 1e-4;
    double delta_window = 0.03;
    int levels = 4;
    bool theta_shape_prior_form = false;
    double gamma_walk_init = 0.25;
    double delta_walk_init = 0.005;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(const std::vector<double>& a) { return dot(a, a); }

}  // namespace detail

// immutable problem context shared by both engines: padded grid, transform
// of the data, the sparse synthesis columns, and the multiplet flattening
struct Problem {
    Catalog catalog;
    Config cfg;
    int n_real = 0, n_pad = 0, n1 = 0, n_mets = 0, n_delta = 0;
    double grid_step = 1.0;
    std::vector<double> ppm, y;  // padded
    std::vector<double> wy;
    std::vector<wavelet::SparseVec> basis;
    std::vector<double> delta_hat;
    std::vector<int> delta_offset;  // per metabolite, into the flat delta vector

    Problem(const Spectrum& s, Catalog cat, Config config)
        : catalog(std::move(cat)), cfg(config) {
        if (s.ppm.size() != s.y.size() || s.ppm.empty())
            throw std::invalid_argument("nmr: spectrum grid/intensity size mismatch");
        for (std::size_t i = 1; i < s.ppm.size(); ++i)
            if (s.ppm[i] <= s.ppm[i - 1])
                throw std::invalid_argument("nmr: spectrum grid must be strictly increasing");
        double total = std::accumulate(s.y.begin(), s.y.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("nmr: spectrum intensities must sum to 1");
        if (catalog.empty()) throw std::invalid_argument("nmr: empty catalog");

        n_real = static_cast<int>(s.ppm.size());
        int block = 1 << cfg.levels;
        n_pad = ((n_real + block - 1) / block) * block;
        n1 = n_pad;
        ppm = s.ppm;
        y = s.y;
        grid_step = n_real > 1 ? s.ppm[n_real - 1] - s.ppm[n_real - 2] : 1.0;
        for (int i = n_real; i < n_pad; ++i) {
            ppm.push_back(ppm.back() + grid_step);
            y.push_back(0.0);
        }
        wy = wavelet::dwt(y, cfg.levels);
        basis.reserve(n1);
        for (int c = 0; c < n1; ++c) basis.push_back(wavelet::basis_column(n_pad, cfg.levels, c));

        n_mets = static_cast<int>(catalog.size());
        for (const auto& met : catalog) {
            delta_offset.push_back(n_delta);
            for (const auto& mu : met.multiplets) {
                delta_hat.push_back(mu.center);
                ++n_delta;
            }
        }
    }

    // the precision conditional counts n/2 powers from the noise, n1/2 from
    // the baseline coefficients, and n_pad/2 from the floor variables (whose
    // scale is 1/(theta r)); with n1 = n_pad that is a + n1 + n/2. Dropping
    // the floor normalization gives the alternative a + (n+n1)/2 form, under
    // which the theta fixed point degenerates toward zero.
    double theta_shape() const {
        return cfg.theta_shape_prior_form ? cfg.a + 0.5 * (n_real + n1)
                                          : cfg.a + n1 + 0.5 * n_real;
    }

    // template column on the padded grid; the pad region carries no signal
    std::vector<double> column(int m, double gamma, const double* delta) const {
        std::vector<double> t(n_pad, 0.0);
        const auto& met = catalog[m];
        for (std::size_t u = 0; u < met.multiplets.size(); ++u) {
            const auto& mu = met.multiplets[u];
            double center = delta[delta_offset[m] + static_cast<int>(u)];
            for (const auto& comp : mu.comps)
                for (int i = 0; i < n_real; ++i)
                    t[i] += mu.protons * comp.weight *
                            lorentzian(ppm[i] - center - comp.offset, gamma);
        }
        return t;
    }

    // chain layout: [beta_0..beta_{M-1}, gamma, delta_0..delta_{D-1}]
    int idx_gamma() const { return n_mets; }
    int idx_delta(int u) const { return n_mets + 1 + u; }
    int chain_dim() const { return n_mets + 1 + n_delta; }

    std::vector<double> tbeta(const std::vector<double>& chain) const {
        std::vector<double> tb(n_pad, 0.0);
        for (int m = 0; m < n_mets; ++m) {
            auto col = column(m, chain[idx_gamma()], chain.data() + n_mets + 1);
            for (int i = 0; i < n_pad; ++i) tb[i] += chain[m] * col[i];
        }
        return tb;
    }

    std::vector<double> chain_init() const {
        std::vector<double> v(chain_dim(), 0.0);
        // start the linewidth a few grid steps wide; a prior-scale start
        // strands the walk across the likelihood valley above the narrow
        // peak mode
        v[idx_gamma()] = std::min(1.0, std::max(4.0 * grid_step, 1e-3));
        for (int u = 0; u < n_delta; ++u) v[idx_delta(u)] = delta_hat[u];
        return v;
    }
};

// conditional rules for (beta, gamma, delta*) against a fixed residual
// target and effective precision; both engines share them
inline std::vector<CoordinateRule> signal_rules(const Problem& P, std::vector<double> ybar,
                                                double theta_eff) {
    std::vector<CoordinateRule> rules;
    auto shared_ybar = std::make_shared<std::vector<double>>(std::move(ybar));

    for (int m = 0; m < P.n_mets; ++m) {
        rules.push_back(GibbsRule{[&P, shared_ybar, theta_eff, m](const std::vector<double>& s) {
            std::vector<double> resid = *shared_ybar;
            std::vector<double> tm;
            for (int k = 0; k < P.n_mets; ++k) {
                auto col = P.column(k, s[P.idx_gamma()], s.data() + P.n_mets + 1);
                if (k == m) {
                    tm = std::move(col);
                } else {
                    for (int i = 0; i < P.n_pad; ++i) resid[i] -= s[k] * col[i];
                }
            }
            double prec = P.cfg.s_beta + theta_eff * detail::norm2(tm);
            double mean = theta_eff * detail::dot(tm, resid) / prec;
            return Distribution{TruncatedNormal{mean, 1.0 / prec, 0.0, kInf}};
        }});
    }

    auto fit_sq = [&P, shared_ybar](double gamma, const double* beta, const double* delta) {
        std::vector<double> resid = *shared_ybar;
        for (int k = 0; k < P.n_mets; ++k) {
            auto col = P.column(k, gamma, delta);
            for (int i = 0; i < P.n_pad; ++i) resid[i] -= beta[k] * col[i];
        }
        return detail::norm2(resid);
    };

    rules.push_back(MhRule{
        [&P, fit_sq, theta_eff](double g, const std::vector<double>& s) {
            if (g <= 0.0) return -kInf;
            double quad = fit_sq(g, s.data(), s.data() + P.n_mets + 1);
            return -0.5 * theta_eff * quad + log_pdf(LogNormal{0.0, 1.0}, g);
        },
        MhProposal{MhProposal::Kind::RwLogNormal, P.cfg.gamma_walk_init}});

    for (int u = 0; u < P.n_delta; ++u) {
        double lo = P.delta_hat[u] - P.cfg.delta_window;
        double hi = P.delta_hat[u] + P.cfg.delta_window;
        TruncatedNormal prior{P.delta_hat[u], P.cfg.delta_prior_var, lo, hi};
        rules.push_back(MhRule{
            [&P, fit_sq, theta_eff, u, prior](double d, const std::vector<double>& s) {
                if (d <= prior.lower || d >= prior.upper) return -kInf;
                std::vector<double> delta(s.begin() + P.n_mets + 1, s.end());
                delta[u] = d;
                double quad = fit_sq(s[P.idx_gamma()], s.data(), delta.data());
                return -0.5 * theta_eff * quad + log_pdf(prior, d);
            },
            MhProposal{MhProposal::Kind::RwTruncNormal, P.cfg.delta_walk_init, lo, hi}});
    }
    return rules;
}

struct RbSink {
    std::vector<double>* vt_mean = nullptr;
    std::vector<double>* vt_moment2 = nullptr;
    std::vector<double>* tau_mean = nullptr;
    std::vector<double>* tau_h2 = nullptr;
};

// one Gibbs pass over (vartheta, tau) under the hard constraint
// B vartheta >= tau, tau <= h; recon tracks B vartheta incrementally
inline void scan_vartheta_tau(const Problem& P, const std::vector<double>& wtarget,
                              double theta_eff, const double* psi_eff,
                              std::vector<double>& vartheta, std::vector<double>& tau,
                              std::vector<double>& recon, RngHandle& rng,
                              const RbSink* sink = nullptr) {
    for (int c = 0; c < P.n1; ++c) {
        const auto& col = P.basis[c];
        double cur = vartheta[c];
        double lo = -kInf, hi = kInf;
        for (std::size_t k = 0; k < col.nnz(); ++k) {
            int i = col.idx[k];
            double b = col.val[k];
            double bound = (tau[i] - recon[i] + b * cur) / b;
            if (b > 0.0) {
                lo = std::max(lo, bound);
            } else {
                hi = std::min(hi, bound);
            }
        }
        if (lo > hi) throw std::runtime_error("nmr: truncation window inverted");
        double m = wtarget[c] / (1.0 + psi_eff[c]);
        double v = 1.0 / (theta_eff * (1.0 + psi_eff[c]));
        TruncatedNormal cond{m, v, lo, hi};
        if (sink) {
            TnMoments tm = tn_moments(m, v, lo, hi);
            (*sink->vt_mean)[c] += tm.mean;
            (*sink->vt_moment2)[c] += tm.var + sq(tm.mean);
        }
        double x = sample(cond, rng);
        for (std::size_t k = 0; k < col.nnz(); ++k) recon[col.idx[k]] += col.val[k] * (x - cur);
        vartheta[c] = x;
    }
    double v = 1.0 / (theta_eff * P.cfg.r);
    for (int i = 0; i < P.n_pad; ++i) {
        double up = std::min(P.cfg.h, recon[i]);
        TruncatedNormal cond{P.cfg.h, v, -kInf, up};
        if (sink) {
            TnMoments tm = tn_moments(P.cfg.h, v, -kInf, up);
            (*sink->tau_mean)[i] += tm.mean;
            (*sink->tau_h2)[i] += tm.var + sq(tm.mean - P.cfg.h);
        }
        tau[i] = sample(cond, rng);
    }
}

inline std::vector<std::string> trace_columns(const Problem& P) {
    std::vector<std::string> cols;
    for (int m = 0; m < P.n_mets; ++m) cols.push_back("beta_" + std::to_string(m));
    cols.push_back("gamma");
    cols.push_back("theta");
    for (int u = 0; u < P.n_delta; ++u) cols.push_back("delta_" + std::to_string(u));
    return cols;
}

class McCaviEngine {
  public:
    McCaviEngine(const Spectrum& s, Catalog cat, Config cfg, std::uint64_t seed)
        : P(s, std::move(cat), cfg),
          rng(seed),
          chain1(P.chain_init()),
          vartheta(P.n1, 0.0),
          tau(P.n_pad, cfg.h),
          recon(P.n_pad, 0.0),
          E_psi(P.n1, 0.0),
          E_vt(P.n1, 0.0),
          E_vt2(P.n1, 0.0),
          E_tau(P.n_pad, 0.0),
          E_tau_h2(P.n_pad, sq(cfg.h)),
          E_tbeta(P.y),
          E_beta(P.n_mets, 0.0),
          E_beta2(P.n_mets, 0.0),
          E_delta(P.delta_hat),
          trace(trace_columns(P)) {
        E_theta = 2.0 * cfg.a / cfg.e;
        E_tbeta_sq = detail::norm2(P.y);
        E_gamma = chain1.values[P.idx_gamma()];
        chain1.scales[P.idx_gamma()] = cfg.gamma_walk_init;
        for (int u = 0; u < P.n_delta; ++u) chain1.scales[P.idx_delta(u)] = cfg.delta_walk_init;
    }

    void sweep(int n_inner) {
        if (n_inner < 1) throw std::invalid_argument("nmr: inner sample count must be >= 1");
        auto t0 = std::chrono::steady_clock::now();

        for (int c = 0; c < P.n1; ++c)
            E_psi[c] = (P.cfg.c_shrink + 0.5) /
                       (0.5 * (E_theta * E_vt2[c] + P.cfg.d_shrink));

        std::vector<double> wetb = wavelet::dwt(E_tbeta, P.cfg.levels);
        double mean_sq = 0.0;
        for (int c = 0; c < P.n1; ++c) mean_sq += sq(P.wy[c] - wetb[c] - E_vt[c]);
        double var_tb = std::max(0.0, E_tbeta_sq - detail::norm2(E_tbeta));
        double var_vt = 0.0;
        double cross = 0.0;
        for (int c = 0; c < P.n1; ++c) {
            var_vt += std::max(0.0, E_vt2[c] - sq(E_vt[c]));
            cross += E_psi[c] * E_vt2[c];
        }
        double rate = 0.5 * (cross + mean_sq + var_tb + var_vt +
                             P.cfg.r * std::accumulate(E_tau_h2.begin(), E_tau_h2.end(), 0.0) +
                             P.cfg.e);
        E_theta = P.theta_shape() / rate;

        std::vector<double> bvt = wavelet::idwt(E_vt, P.cfg.levels);
        std::vector<double> ybar(P.n_pad);
        for (int i = 0; i < P.n_pad; ++i) ybar[i] = P.y[i] - bvt[i];
        auto rules = signal_rules(P, std::move(ybar), E_theta);

        std::vector<double> sum_tb(P.n_pad, 0.0), sum_b(P.n_mets, 0.0), sum_b2(P.n_mets, 0.0);
        std::vector<double> sum_d(P.n_delta, 0.0);
        double sum_tb2 = 0.0, sum_g = 0.0;
        for (int it = 0; it < n_inner; ++it) {
            mwg_sweep(chain1, rules, rng);
            std::vector<double> tb = P.tbeta(chain1.values);
            for (int i = 0; i < P.n_pad; ++i) sum_tb[i] += tb[i];
            sum_tb2 += detail::norm2(tb);
            for (int m = 0; m < P.n_mets; ++m) {
                sum_b[m] += chain1.values[m];
                sum_b2[m] += sq(chain1.values[m]);
            }
            sum_g += chain1.values[P.idx_gamma()];
            for (int u = 0; u < P.n_delta; ++u) sum_d[u] += chain1.values[P.idx_delta(u)];
        }
        double inv = 1.0 / n_inner;
        for (int i = 0; i < P.n_pad; ++i) E_tbeta[i] = sum_tb[i] * inv;
        E_tbeta_sq = sum_tb2 * inv;
        for (int m = 0; m < P.n_mets; ++m) {
            E_beta[m] = sum_b[m] * inv;
            E_beta2[m] = sum_b2[m] * inv;
        }
        E_gamma = sum_g * inv;
        for (int u = 0; u < P.n_delta; ++u) E_delta[u] = sum_d[u] * inv;

        std::vector<double> wetb2 = wavelet::dwt(E_tbeta, P.cfg.levels);
        std::vector<double> wtarget(P.n1);
        for (int c = 0; c < P.n1; ++c) wtarget[c] = P.wy[c] - wetb2[c];

        std::vector<double> bv = wavelet::idwt(vartheta, P.cfg.levels);
        recon = bv;

        std::vector<double> s_vt(P.n1, 0.0), s_vt2(P.n1, 0.0);
        std::vector<double> s_tau(P.n_pad, 0.0), s_tau_h2(P.n_pad, 0.0);
        RbSink sink{&s_vt, &s_vt2, &s_tau, &s_tau_h2};
        for (int it = 0; it < n_inner; ++it)
            scan_vartheta_tau(P, wtarget, E_theta, E_psi.data(), vartheta, tau, recon, rng, &sink);
        for (int c = 0; c < P.n1; ++c) {
            E_vt[c] = s_vt[c] * inv;
            E_vt2[c] = s_vt2[c] * inv;
        }
        for (int i = 0; i < P.n_pad; ++i) {
            E_tau[i] = s_tau[i] * inv;
            E_tau_h2[i] = s_tau_h2[i] * inv;
        }

        std::vector<double> row(E_beta);
        row.push_back(E_gamma);
        row.push_back(E_theta);
        row.insert(row.end(), E_delta.begin(), E_delta.end());
        trace.append(row, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    Problem P;
    RngHandle rng;
    ChainState chain1;
    std::vector<double> vartheta, tau, recon;
    double E_theta = 0.0, E_tbeta_sq = 0.0, E_gamma = 0.0;
    std::vector<double> E_psi, E_vt, E_vt2, E_tau, E_tau_h2, E_tbeta, E_beta, E_beta2, E_delta;
    SweepTrace trace;
};

class McmcEngine {
  public:
    McmcEngine(const Spectrum& s, Catalog cat, Config cfg, std::uint64_t seed)
        : P(s, std::move(cat), cfg),
          rng(seed),
          chain1(P.chain_init()),
          vartheta(P.n1, 0.0),
          tau(P.n_pad, cfg.h),
          psi(P.n1, 1.0),
          recon(P.n_pad, 0.0),
          trace(trace_columns(P)) {
        theta = 2.0 * cfg.a / cfg.e;
        chain1.scales[P.idx_gamma()] = cfg.gamma_walk_init;
        for (int u = 0; u < P.n_delta; ++u) chain1.scales[P.idx_delta(u)] = cfg.delta_walk_init;
    }

    void iterate() {
        auto t0 = std::chrono::steady_clock::now();

        for (int c = 0; c < P.n1; ++c)
            psi[c] = sample(GammaDist{P.cfg.c_shrink + 0.5,
                                      0.5 * (P.cfg.d_shrink + theta * sq(vartheta[c]))},
                            rng);

        std::vector<double> tb = P.tbeta(chain1.values);
        std::vector<double> ymt(P.n_pad);
        for (int i = 0; i < P.n_pad; ++i) ymt[i] = P.y[i] - tb[i];
        std::vector<double> wres = wavelet::dwt(ymt, P.cfg.levels);
        double rate = P.cfg.e;
        for (int c = 0; c < P.n1; ++c)
            rate += psi[c] * sq(vartheta[c]) + sq(wres[c] - vartheta[c]);
        for (int i = 0; i < P.n_pad; ++i) rate += P.cfg.r * sq(tau[i] - P.cfg.h);
        theta = sample(GammaDist{P.theta_shape(), 0.5 * rate}, rng);

        recon = wavelet::idwt(vartheta, P.cfg.levels);
        std::vector<double> ybar(P.n_pad);
        for (int i = 0; i < P.n_pad; ++i) ybar[i] = P.y[i] - recon[i];
        auto rules = signal_rules(P, std::move(ybar), theta);
        mwg_sweep(chain1, rules, rng);

        tb = P.tbeta(chain1.values);
        for (int i = 0; i < P.n_pad; ++i) ymt[i] = P.y[i] - tb[i];
        std::vector<double> wtarget = wavelet::dwt(ymt, P.cfg.levels);
        scan_vartheta_tau(P, wtarget, theta, psi.data(), vartheta, tau, recon, rng);

        std::vector<double> row;
        for (int m = 0; m < P.n_mets; ++m) row.push_back(chain1.values[m]);
        row.push_back(chain1.values[P.idx_gamma()]);
        row.push_back(theta);
        for (int u = 0; u < P.n_delta; ++u) row.push_back(chain1.values[P.idx_delta(u)]);
        trace.append(row, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    Problem P;
    RngHandle rng;
    ChainState chain1;
    std::vector<double> vartheta, tau, psi, recon;
    double theta = 0.0;
    SweepTrace trace;
};

struct Fixture {
    Spectrum spec;
    Catalog catalog;
    std::vector<double> beta_true;
    std::vector<double> delta_true;
    double gamma_true = 0.0;
    double theta_true = 0.0;
    std::vector<double> baseline;
    double raw_sum = 0.0;
};

// synthetic two-metabolite spectrum on a 512-point grid over [1, 4] ppm;
// recorded truths are in post-normalization units
inline Fixture make_fixture(std::uint64_t seed = 424242) {
    int n = 512;
    Fixture f;
    f.catalog = {
        Metabolite{"met_a",
                   {Multiplet{1.5, 3.0, {{0.0, 1.0}}},
                    Multiplet{2.2, 2.0, {{-0.008, 0.5}, {0.008, 0.5}}}}},
        Metabolite{"met_b",
                   {Multiplet{3.1, 3.0, {{-0.01, 0.25}, {0.0, 0.5}, {0.01, 0.25}}}}}};
    std::vector<double> beta_raw = {6e-4, 7.5e-4};
    f.delta_true = {1.504, 2.194, 3.105};
    f.gamma_true = 0.005;
    double theta_raw = 1e4;

    f.spec.ppm.resize(n);
    for (int i = 0; i < n; ++i) f.spec.ppm[i] = 1.0 + 3.0 * i / (n - 1.0);

    std::vector<double> signal(n, 0.0);
    int d = 0;
    for (std::size_t m = 0; m < f.catalog.size(); ++m) {
        for (const auto& mu : f.catalog[m].multiplets) {
            for (const auto& comp : mu.comps)
                for (int i = 0; i < n; ++i)
                    signal[i] += beta_raw[m] * mu.protons * comp.weight *
                                 lorentzian(f.spec.ppm[i] - f.delta_true[d] - comp.offset,
                                            f.gamma_true);
            ++d;
        }
    }
    f.baseline.resize(n);
    RngHandle rng(seed);
    f.spec.y.resize(n);
    double noise_sd = 1.0 / std::sqrt(theta_raw);
    for (int i = 0; i < n; ++i) {
        f.baseline[i] = 7.4e-4 * std::exp(-sq(f.spec.ppm[i] - 2.6) / (2.0 * sq(0.35)));
        f.spec.y[i] = signal[i] + f.baseline[i] + noise_sd * rng.normal01();
    }
    f.raw_sum = std::accumulate(f.spec.y.begin(), f.spec.y.end(), 0.0);
    for (auto& v : f.spec.y) v /= f.raw_sum;
    for (auto& v : f.baseline) v /= f.raw_sum;
    f.beta_true = beta_raw;
    for (auto& b : f.beta_true) b /= f.raw_sum;
    f.theta_true = theta_raw * sq(f.raw_sum);
    return f;
}

}  // namespace mcvi::nmr
