#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcvi/bbvi.hpp"
#include "mcvi/math.hpp"
#include "mcvi/mcmc.hpp"
#include "mcvi/vi.hpp"

namespace mcvi::model2 {

// y_j ~ N(vartheta + kappa_j, 1/theta) with vartheta ~ N(0, 10),
// kappa_j | psi_j ~ TN(0, 10, -psi_j, psi_j), psi_j ~ TN(0.05, 10, 0, 2),
// theta ~ Gamma(1, 1). The support enforces |kappa_j| < psi_j < 2 jointly.

inline constexpr double kPriorVar = 10.0;
inline constexpr double kPriorPrec = 0.1;
inline constexpr double kPsiLoc = 0.05;
inline constexpr double kPsiCap = 2.0;

struct Data {
    std::vector<double> y;

    int n() const { return static_cast<int>(y.size()); }

    static Data from_values(std::vector<double> v) {
        if (v.empty()) throw std::invalid_argument("model2::Data: empty sample");
        return Data{std::move(v)};
    }
};

inline double smooth_shift(int j, int n) {
    return 1.5 * std::sin(-2.0 * kPi + 4.0 * kPi * j / n);
}

inline Data generate(int n, double vartheta, double theta, RngHandle& rng) {
    if (n <= 0 || theta <= 0) throw std::invalid_argument("model2::generate: bad arguments");
    std::vector<double> y(n);
    double sd = 1.0 / std::sqrt(theta);
    for (int j = 0; j < n; ++j) y[j] = vartheta + smooth_shift(j, n) + sd * rng.normal01();
    return Data::from_values(std::move(y));
}

// log of the kappa-prior normalizer Phi(psi/sqrt(10)) - Phi(-psi/sqrt(10))
inline double log_kappa_norm(double psi) {
    double s = psi / std::sqrt(kPriorVar);
    return normal_log_cdf_diff(-s, s);
}

// ---------------------------------------------------------------------------
// Metropolis-within-Gibbs on the full posterior.
// State layout: [vartheta, kappa_0..kappa_{n-1}, theta, psi_0..psi_{n-1}].

inline std::size_t idx_vartheta() { return 0; }
inline std::size_t idx_kappa(int j) { return 1 + static_cast<std::size_t>(j); }
inline std::size_t idx_theta(int n) { return 1 + static_cast<std::size_t>(n); }
inline std::size_t idx_psi(int n, int j) { return 2 + static_cast<std::size_t>(n + j); }

inline std::vector<CoordinateRule> mcmc_rules(const Data& d) {
    int n = d.n();
    std::vector<CoordinateRule> rules;
    rules.reserve(2 * n + 2);

    rules.push_back(GibbsRule{[d, n](const std::vector<double>& s) -> Distribution {
        double theta = s[idx_theta(n)];
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += d.y[j] - s[idx_kappa(j)];
        double prec = kPriorPrec + n * theta;
        return Normal{sum * theta / prec, 1.0 / prec};
    }});

    for (int j = 0; j < n; ++j) {
        rules.push_back(GibbsRule{[d, n, j](const std::vector<double>& s) -> Distribution {
            double theta = s[idx_theta(n)];
            double psi = s[idx_psi(n, j)];
            double prec = kPriorPrec + theta;
            double m = (d.y[j] - s[idx_vartheta()]) * theta / prec;
            return TruncatedNormal{m, 1.0 / prec, -psi, psi};
        }});
    }

    rules.push_back(GibbsRule{[d, n](const std::vector<double>& s) -> Distribution {
        double ss = 0.0;
        for (int j = 0; j < n; ++j) {
            double r = d.y[j] - s[idx_vartheta()] - s[idx_kappa(j)];
            ss += r * r;
        }
        return GammaDist{1.0 + 0.5 * n, 1.0 + 0.5 * ss};
    }});

    for (int j = 0; j < n; ++j) {
        MhRule rule;
        rule.log_conditional = [n, j](double psi, const std::vector<double>& s) {
            double lo = std::abs(s[idx_kappa(j)]);
            if (psi <= lo || psi >= kPsiCap) return -kInf;
            double c = psi - kPsiLoc;
            return -c * c / (2.0 * kPriorVar) - log_kappa_norm(psi);
        };
        rule.proposal = MhProposal{MhProposal::Kind::IndepUniform, 1.0, 0.0, kPsiCap};
        rules.push_back(std::move(rule));
    }
    return rules;
}

inline ChainState mcmc_init(const Data& d) {
    int n = d.n();
    std::vector<double> v(2 * n + 2, 0.0);
    v[idx_theta(n)] = 1.0;
    for (int j = 0; j < n; ++j) v[idx_psi(n, j)] = 1.0;
    return ChainState(std::move(v));
}

inline ConstraintCheck mcmc_constraint(const Data& d) {
    int n = d.n();
    return [n](const std::vector<double>& s) {
        if (!(s[idx_theta(n)] > 0.0)) return false;
        for (int j = 0; j < n; ++j) {
            double psi = s[idx_psi(n, j)];
            if (!(psi > 0.0 && psi < kPsiCap)) return false;
            if (!(std::abs(s[idx_kappa(j)]) < psi)) return false;
        }
        return true;
    };
}

// ---------------------------------------------------------------------------
// MC-CAVI: each (kappa_j, psi_j) pair is one chain block sampled against the
// implied pair factor (psi first via an independent uniform walk, kappa by an
// exact truncated-normal draw); vartheta and theta then take closed-form
// updates from the published pair expectations.
// Pair-chain state layout: [psi, kappa].

inline std::string kappa_key(int j) { return "E_kappa_" + std::to_string(j); }
inline std::string kappa2_key(int j) { return "E_kappa2_" + std::to_string(j); }

// E[(y_j - vartheta - kappa_j)^2] under the factorized cache
inline double expected_resid2(const Data& d, const Moments& m, int j) {
    double y = d.y[j];
    double ev = m.at("E_vartheta");
    double ev2 = m.at("E_vartheta2");
    double ek = m.at(kappa_key(j));
    double ek2 = m.at(kappa2_key(j));
    return y * y - 2.0 * y * ev - 2.0 * y * ek + ev2 + 2.0 * ev * ek + ek2;
}

inline ModelSpec mc_spec(const Data& d) {
    int n = d.n();
    ModelSpec spec;

    for (int j = 0; j < n; ++j) {
        McmcBlock blk;
        blk.name = "pair_" + std::to_string(j);
        blk.init = {1.0, 0.0};
        blk.conditionals = [d, j](const Moments& m) {
            double etheta = m.at("E_theta");
            double ev = m.at("E_vartheta");
            double prec = kPriorPrec + etheta;
            double mean_k = (d.y[j] - ev) * etheta / prec;
            double var_k = 1.0 / prec;

            MhRule psi_rule;
            psi_rule.log_conditional = [](double psi, const std::vector<double>& s) {
                if (psi <= std::abs(s[1]) || psi >= kPsiCap) return -kInf;
                double c = psi - kPsiLoc;
                return -c * c / (2.0 * kPriorVar) - log_kappa_norm(psi);
            };
            psi_rule.proposal = MhProposal{MhProposal::Kind::IndepUniform, 1.0, 0.0, kPsiCap};

            GibbsRule kappa_rule{[mean_k, var_k](const std::vector<double>& s) -> Distribution {
                return TruncatedNormal{mean_k, var_k, -s[0], s[0]};
            }};
            return std::vector<CoordinateRule>{std::move(psi_rule), std::move(kappa_rule)};
        };
        blk.stats = {{kappa_key(j), [](const std::vector<double>& s) { return s[1]; }},
                     {kappa2_key(j), [](const std::vector<double>& s) { return s[1] * s[1]; }}};
        blk.constraint = [](const std::vector<double>& s) {
            return s[0] > 0.0 && s[0] < kPsiCap && std::abs(s[1]) < s[0];
        };
        spec.blocks.push_back(std::move(blk));
    }

    spec.blocks.push_back(ClosedFormBlock{
        "vartheta",
        [d, n](const Moments& m) -> Distribution {
            double etheta = m.at("E_theta");
            double sum = 0.0;
            for (int j = 0; j < n; ++j) sum += d.y[j] - m.at(kappa_key(j));
            double prec = kPriorPrec + n * etheta;
            return Normal{sum * etheta / prec, 1.0 / prec};
        },
        [](const Distribution& dist, Moments& m) {
            const auto& q = std::get<Normal>(dist);
            m["E_vartheta"] = q.mean;
            m["E_vartheta2"] = q.mean * q.mean + q.var;
        }});

    spec.blocks.push_back(ClosedFormBlock{
        "theta",
        [d, n](const Moments& m) -> Distribution {
            double ss = 0.0;
            for (int j = 0; j < n; ++j) ss += expected_resid2(d, m, j);
            return GammaDist{1.0 + 0.5 * n, 1.0 + 0.5 * ss};
        },
        [](const Distribution& dist, Moments& m) {
            const auto& q = std::get<GammaDist>(dist);
            m["E_theta"] = q.shape / q.rate;
        }});

    spec.init = {{"E_theta", 1.0}, {"E_vartheta", 4.0}, {"E_vartheta2", 17.0}};
    spec.monitors = {{"E_vartheta", [](const Moments& m) { return m.at("E_vartheta"); }},
                     {"E_theta", [](const Moments& m) { return m.at("E_theta"); }}};
    return spec;
}

// ---------------------------------------------------------------------------
// BBVI families. Lambda layout: [alpha_vt, gamma_vt, alpha_th, gamma_th,
// then per pair j: alpha_k, gamma_k, alpha_p, gamma_p]. Gaussian gammas are
// log-variances, truncated-normal gammas log-sds, and the theta factor is
// Gamma(exp(alpha), exp(gamma)) in shape/rate form.

namespace detail {

// d log q / d(mu, gamma) for TN(x; mu, sigma^2, a, b) with sigma = exp(gamma)
inline void tn_score(double x, double mu, double sigma, double a, double b, double& d_mu,
                     double& d_gamma) {
    double al = (a - mu) / sigma;
    double be = (b - mu) / sigma;
    double log_z = normal_log_cdf_diff(al, be);
    double ra = std::exp(normal_log_pdf_std(al) - log_z);
    double rb = std::exp(normal_log_pdf_std(be) - log_z);
    double u = (x - mu) / sigma;
    d_mu = u / sigma - (ra - rb) / sigma;
    d_gamma = -1.0 + u * u - (al * ra - be * rb);
}

inline double tn_log_pdf(double x, double mu, double sigma, double a, double b) {
    return log_pdf(TruncatedNormal{mu, sigma * sigma, a, b}, x);
}

}  // namespace detail

inline FactorFamily bbvi_vartheta_factor(const Data& d) {
    FactorFamily f;
    f.name = "vartheta";
    f.dim = 2;
    f.sample = [](const double* lam, RngHandle& rng) {
        return std::vector<double>{lam[0] + std::exp(0.5 * lam[1]) * rng.normal01()};
    };
    f.log_q = [](const double* lam, const std::vector<double>& z) {
        double diff = z[0] - lam[0];
        return -0.5 * (kLog2Pi + lam[1]) - 0.5 * diff * diff * std::exp(-lam[1]);
    };
    f.score = [](const double* lam, const std::vector<double>& z, double* out) {
        double diff = z[0] - lam[0];
        double inv_v = std::exp(-lam[1]);
        out[0] = diff * inv_v;
        out[1] = -0.5 + 0.5 * diff * diff * inv_v;
    };
    f.log_c = [d](const std::vector<double>& z, const Moments& m) {
        double vt = z[0];
        double etheta = m.at("E_theta");
        double acc = 0.0;
        for (int j = 0; j < d.n(); ++j) {
            double r = d.y[j] - vt;
            acc += r * r - 2.0 * r * m.at(kappa_key(j)) + m.at(kappa2_key(j));
        }
        return -vt * vt / (2.0 * kPriorVar) - 0.5 * etheta * acc;
    };
    f.publish = [](const double* lam, Moments& m) {
        m["E_vartheta"] = lam[0];
        m["V_vartheta"] = std::exp(lam[1]);
        m["E_vartheta2"] = lam[0] * lam[0] + std::exp(lam[1]);
    };
    return f;
}

inline FactorFamily bbvi_theta_factor(const Data& d) {
    FactorFamily f;
    f.name = "theta";
    f.dim = 2;
    f.sample = [](const double* lam, RngHandle& rng) {
        return std::vector<double>{sample(GammaDist{std::exp(lam[0]), std::exp(lam[1])}, rng)};
    };
    f.log_q = [](const double* lam, const std::vector<double>& z) {
        double shape = std::exp(lam[0]), rate = std::exp(lam[1]);
        return shape * lam[1] - std::lgamma(shape) + (shape - 1.0) * std::log(z[0]) -
               rate * z[0];
    };
    f.score = [](const double* lam, const std::vector<double>& z, double* out) {
        double shape = std::exp(lam[0]), rate = std::exp(lam[1]);
        out[0] = shape * (lam[1] - digamma(shape) + std::log(z[0]));
        out[1] = shape - rate * z[0];
    };
    f.log_c = [d](const std::vector<double>& z, const Moments& m) {
        double theta = z[0];
        double ss = 0.0;
        for (int j = 0; j < d.n(); ++j) ss += expected_resid2(d, m, j);
        return 0.5 * d.n() * std::log(theta) - theta * (1.0 + 0.5 * ss);
    };
    f.publish = [](const double* lam, Moments& m) { m["E_theta"] = std::exp(lam[0] - lam[1]); };
    return f;
}

inline FactorFamily bbvi_pair_factor(const Data& d, int j) {
    FactorFamily f;
    f.name = "pair_" + std::to_string(j);
    f.dim = 4;  // alpha_k, gamma_k, alpha_p, gamma_p; z = {kappa, psi}
    f.sample = [](const double* lam, RngHandle& rng) {
        double psi = sample(TruncatedNormal{lam[2], std::exp(2.0 * lam[3]), 0.0, kPsiCap}, rng);
        double kap = sample(TruncatedNormal{lam[0], std::exp(2.0 * lam[1]), -psi, psi}, rng);
        return std::vector<double>{kap, psi};
    };
    f.log_q = [](const double* lam, const std::vector<double>& z) {
        return detail::tn_log_pdf(z[0], lam[0], std::exp(lam[1]), -z[1], z[1]) +
               detail::tn_log_pdf(z[1], lam[2], std::exp(lam[3]), 0.0, kPsiCap);
    };
    f.score = [](const double* lam, const std::vector<double>& z, double* out) {
        detail::tn_score(z[0], lam[0], std::exp(lam[1]), -z[1], z[1], out[0], out[1]);
        detail::tn_score(z[1], lam[2], std::exp(lam[3]), 0.0, kPsiCap, out[2], out[3]);
    };
    f.log_c = [d, j](const std::vector<double>& z, const Moments& m) {
        double kap = z[0], psi = z[1];
        double etheta = m.at("E_theta");
        double ev = m.at("E_vartheta");
        double ev2 = m.at("E_vartheta2");
        double r = d.y[j] - kap;
        double cp = psi - kPsiLoc;
        return -0.5 * etheta * (r * r - 2.0 * r * ev + ev2) -
               (kap * kap + cp * cp) / (2.0 * kPriorVar) - log_kappa_norm(psi);
    };
    f.publish = [j](const double* lam, Moments& m) {
        const QuadratureRule& q = gauss_legendre_cached();
        TruncatedNormal psi_q{lam[2], std::exp(2.0 * lam[3]), 0.0, kPsiCap};
        double sig_k = std::exp(lam[1]);
        double mass = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i) {
            double psi = 0.5 * kPsiCap * (q.nodes[i] + 1.0);
            double w = 0.5 * kPsiCap * q.weights[i] * std::exp(log_pdf(psi_q, psi));
            TnMoments tm = tn_moments(lam[0], sig_k * sig_k, -psi, psi);
            mass += w;
            m1 += w * tm.mean;
            m2 += w * (tm.mean * tm.mean + tm.var);
        }
        m[kappa_key(j)] = m1 / mass;
        m[kappa2_key(j)] = m2 / mass;
    };
    return f;
}

inline BbviModel bbvi_model(const Data& d) {
    BbviModel model;
    model.factors.push_back(bbvi_vartheta_factor(d));
    model.factors.push_back(bbvi_theta_factor(d));
    for (int j = 0; j < d.n(); ++j) model.factors.push_back(bbvi_pair_factor(d, j));
    model.init_lambda.assign(model.total_dim(), 0.0);
    model.init_lambda[0] = 4.0;
    model.monitors = {
        {"E_vartheta", [](const Moments& m) { return m.at("E_vartheta"); }},
        {"sd_vartheta", [](const Moments& m) { return std::sqrt(m.at("V_vartheta")); }},
        {"E_theta", [](const Moments& m) { return m.at("E_theta"); }}};
    return model;
}

}  // namespace mcvi::model2
