#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcvi/math.hpp"
#include "mcvi/vi.hpp"

namespace mcvi::model1 {

// x_j ~ N(vartheta, 1/tau), vartheta | tau ~ N(0, 1/tau), tau ~ Gamma(1, 1).
// Mean-field factors: q(tau) Gamma with fixed shape (n+3)/2 and rate zeta,
// q(vartheta) normal with fixed mean n*xbar/(1+n).

struct Data {
    std::vector<double> x;
    double sum = 0.0;
    double sumsq = 0.0;

    int n() const { return static_cast<int>(x.size()); }
    double mean() const { return sum / x.size(); }

    static Data from_values(std::vector<double> v) {
        if (v.empty()) throw std::invalid_argument("model1::Data: empty sample");
        Data d;
        d.x = std::move(v);
        for (double xi : d.x) {
            d.sum += xi;
            d.sumsq += xi * xi;
        }
        return d;
    }
};

inline Data generate(int n, double mu, double var, RngHandle& rng) {
    if (n <= 0 || var <= 0) throw std::invalid_argument("model1::generate: bad arguments");
    std::vector<double> x(n);
    double sd = std::sqrt(var);
    for (auto& xi : x) xi = mu + sd * rng.normal01();
    return Data::from_values(std::move(x));
}

inline double tau_shape(const Data& d) { return (d.n() + 3) / 2.0; }

inline double zeta_from_moments(const Data& d, const Moments& m) {
    double ev = m.at("E_vartheta");
    double ev2 = m.at("E_vartheta2");
    return 1.0 + ((1.0 + d.n()) * ev2 - 2.0 * d.sum * ev + d.sumsq) / 2.0;
}

inline double log_joint(const Data& d, double tau, double th) {
    double n = d.n();
    return 0.5 * n * (std::log(tau) - kLog2Pi) -
           0.5 * tau * (d.sumsq - 2.0 * d.sum * th + n * th * th) +
           0.5 * (std::log(tau) - kLog2Pi) - 0.5 * tau * th * th - tau;
}

namespace detail {

inline ClosedFormBlock vartheta_block(const Data& d) {
    return ClosedFormBlock{
        "vartheta",
        [d](const Moments& m) -> Distribution {
            double prec = (1.0 + d.n()) * m.at("E_tau");
            return Normal{d.sum / (1.0 + d.n()), 1.0 / prec};
        },
        [](const Distribution& dist, Moments& m) {
            const auto& q = std::get<Normal>(dist);
            m["E_vartheta"] = q.mean;
            m["E_vartheta2"] = q.mean * q.mean + q.var;
        }};
}

inline std::vector<Monitor> monitors(const Data& d) {
    return {
        {"zeta", [d](const Moments& m) { return zeta_from_moments(d, m); }},
        {"theta", [d](const Moments& m) { return (1.0 + d.n()) * m.at("E_tau"); }},
        {"E_tau", [](const Moments& m) { return m.at("E_tau"); }},
    };
}

inline Moments init_moments() { return {{"E_vartheta", 0.0}, {"E_vartheta2", 0.0}}; }

// ELBO for given factor parameters, with cached data sums.
inline double elbo_terms(const Data& d, double shape, double rate, double m, double v) {
    double n = d.n();
    double elog_tau = digamma(shape) - std::log(rate);
    double e_tau = shape / rate;
    double lik = 0.5 * n * (elog_tau - kLog2Pi) -
                 0.5 * e_tau * (d.sumsq - 2.0 * d.sum * m + n * (m * m + v));
    double prior_v = 0.5 * (elog_tau - kLog2Pi) - 0.5 * e_tau * (m * m + v);
    double prior_t = -e_tau;
    double ent_v = 0.5 * std::log(2.0 * kPi * v) + 0.5;
    double eq_t = shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * elog_tau - shape;
    return lik + prior_v + prior_t + ent_v - eq_t;
}

}  // namespace detail

inline ModelSpec cavi_spec(const Data& d) {
    ModelSpec spec;
    spec.blocks.push_back(ClosedFormBlock{
        "tau",
        [d](const Moments& m) -> Distribution {
            return GammaDist{tau_shape(d), zeta_from_moments(d, m)};
        },
        [](const Distribution& dist, Moments& m) {
            const auto& q = std::get<GammaDist>(dist);
            m["E_tau"] = q.shape / q.rate;
            m["zeta"] = q.rate;
        }});
    spec.blocks.push_back(detail::vartheta_block(d));
    spec.init = detail::init_moments();
    spec.monitors = detail::monitors(d);
    spec.elbo_analytic = [d](const VariationalState& st) {
        if (!st.factors[0] || !st.factors[1])
            throw std::logic_error("model1 elbo: factors not initialized");
        const auto& g = std::get<GammaDist>(*st.factors[0]);
        const auto& q = std::get<Normal>(*st.factors[1]);
        return detail::elbo_terms(d, g.shape, g.rate, q.mean, q.var);
    };
    spec.elbo_sample = [d](const VariationalState& st, RngHandle& rng) {
        if (!st.factors[0] || !st.factors[1])
            throw std::logic_error("model1 elbo: factors not initialized");
        const Distribution& g = *st.factors[0];
        const Distribution& q = *st.factors[1];
        double tau = sample(g, rng);
        double th = sample(q, rng);
        return log_joint(d, tau, th) - log_pdf(g, tau) - log_pdf(q, th);
    };
    return spec;
}

// Same model with the tau factor handled by an inner chain targeting the
// implied Gamma(. , zeta) optimum, as a deliberately intractable-free testbed.
inline ModelSpec mc_spec(const Data& d, double proposal_scale = 0.3) {
    ModelSpec spec;
    McmcBlock tau;
    tau.name = "tau";
    tau.init = {1.0};
    double shape = tau_shape(d);
    tau.conditionals = [d, shape, proposal_scale](const Moments& m) {
        double zeta = zeta_from_moments(d, m);
        MhRule rule;
        rule.log_conditional = [shape, zeta](double t, const std::vector<double>&) {
            if (t <= 0.0) return -kInf;
            return (shape - 1.0) * std::log(t) - zeta * t;
        };
        rule.proposal = MhProposal{MhProposal::Kind::RwLogNormal, proposal_scale};
        return std::vector<CoordinateRule>{std::move(rule)};
    };
    tau.stats = {{"E_tau", [](const std::vector<double>& s) { return s[0]; }}};
    spec.blocks.push_back(std::move(tau));
    spec.blocks.push_back(detail::vartheta_block(d));
    spec.init = detail::init_moments();
    spec.monitors = detail::monitors(d);
    spec.elbo_analytic = [d, shape](const VariationalState& st) {
        if (!st.factors[1]) throw std::logic_error("model1 elbo: vartheta factor missing");
        const auto& q = std::get<Normal>(*st.factors[1]);
        return detail::elbo_terms(d, shape, zeta_from_moments(d, st.moments), q.mean, q.var);
    };
    spec.elbo_sample = [d, shape](const VariationalState& st, RngHandle& rng) {
        if (!st.factors[1]) throw std::logic_error("model1 elbo: vartheta factor missing");
        Distribution g = GammaDist{shape, zeta_from_moments(d, st.moments)};
        const Distribution& q = *st.factors[1];
        double tau = sample(g, rng);
        double th = sample(q, rng);
        return log_joint(d, tau, th) - log_pdf(g, tau) - log_pdf(q, th);
    };
    return spec;
}

// Exact posterior of tau after integrating vartheta out analytically.
inline GammaDist posterior_tau(const Data& d) {
    double n = d.n();
    double b = 1.0 + (d.sumsq - d.sum * d.sum / (n + 1.0)) / 2.0;
    return GammaDist{n / 2.0 + 1.0, b};
}

}  // namespace mcvi::model1
