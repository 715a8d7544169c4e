#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcvi/rng.hpp"
#include "mcvi/trace.hpp"
#include "mcvi/vi.hpp"

namespace mcvi {

// One mean-field factor with free parameters lam (a slice of the global
// lambda vector). log_c evaluates every joint term containing this factor's
// variables, with the other factors entering through their cached
// expectations; that is the Rao-Blackwellized integrand.
struct FactorFamily {
    std::string name;
    int dim = 0;
    std::function<std::vector<double>(const double*, RngHandle&)> sample;
    std::function<double(const double*, const std::vector<double>&)> log_q;
    std::function<void(const double*, const std::vector<double>&, double*)> score;
    std::function<double(const std::vector<double>&, const Moments&)> log_c;
    std::function<void(const double*, Moments&)> publish;
};

struct BbviModel {
    std::vector<FactorFamily> factors;
    std::vector<double> init_lambda;
    std::vector<Monitor> monitors;

    int total_dim() const {
        int d = 0;
        for (const auto& f : factors) d += f.dim;
        return d;
    }

    void publish_all(const std::vector<double>& lambda, Moments& m) const {
        int off = 0;
        for (const auto& f : factors) {
            f.publish(lambda.data() + off, m);
            off += f.dim;
        }
    }
};

// Score-function gradient for one factor from n samples of q_i. Both the
// plain estimator mean(f) and the control-variate estimator mean(f - a g)
// are formed from the same draws, where f = score * (log c - log q),
// g = score, and the scalar a sums covariances over the factor's
// coordinates. Only O(dim) accumulators are held.
struct GradientEstimate {
    std::vector<double> plain;
    std::vector<double> cv;
    double a = 0.0;
};

inline GradientEstimate rb_gradient(const FactorFamily& fac, const double* lam,
                                    const Moments& moments, int n, RngHandle& rng) {
    if (n < 2) throw std::invalid_argument("rb_gradient: need at least 2 samples");
    int d = fac.dim;
    std::vector<double> sum_f(d, 0.0), sum_g(d, 0.0), sum_fg(d, 0.0), sum_gg(d, 0.0);
    std::vector<double> sc(d);
    for (int s = 0; s < n; ++s) {
        std::vector<double> z = fac.sample(lam, rng);
        fac.score(lam, z, sc.data());
        double w = fac.log_c(z, moments) - fac.log_q(lam, z);
        for (int k = 0; k < d; ++k) {
            double f = sc[k] * w;
            sum_f[k] += f;
            sum_g[k] += sc[k];
            sum_fg[k] += f * sc[k];
            sum_gg[k] += sc[k] * sc[k];
        }
    }
    double cov = 0.0, var = 0.0;
    for (int k = 0; k < d; ++k) {
        cov += sum_fg[k] - sum_f[k] * sum_g[k] / n;
        var += sum_gg[k] - sum_g[k] * sum_g[k] / n;
    }
    GradientEstimate est;
    est.a = var > 0.0 ? cov / var : 0.0;
    est.plain.resize(d);
    est.cv.resize(d);
    for (int k = 0; k < d; ++k) {
        est.plain[k] = sum_f[k] / n;
        est.cv[k] = est.plain[k] - est.a * sum_g[k] / n;
    }
    return est;
}

inline void adagrad_step(std::vector<double>& lambda, std::vector<double>& grad_sq,
                         const std::vector<double>& grad, double eta, double eps) {
    if (lambda.size() != grad.size() || grad_sq.size() != grad.size())
        throw std::invalid_argument("adagrad_step: size mismatch");
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        grad_sq[k] += grad[k] * grad[k];
        lambda[k] += eta * grad[k] / std::sqrt(grad_sq[k] + eps);
    }
}

struct BbviOptions {
    int iters = 100;
    int n_samples = 10;
    double eta = 0.5;
    double eps = 1e-10;
    bool control_variates = true;
    double max_abs_lambda = 1e6;
    std::function<bool(int)> should_stop;  // checked once per completed iteration
};

struct BbviResult {
    std::vector<double> lambda;
    std::vector<double> grad_sq;
    Moments moments;
    SweepTrace trace;
};

struct BbviDivergence : std::runtime_error {
    SweepTrace trace;
    int iteration;
    BbviDivergence(int iter, SweepTrace t)
        : std::runtime_error("bbvi: lambda diverged at iteration " + std::to_string(iter)),
          trace(std::move(t)),
          iteration(iter) {}
};

inline BbviResult run_bbvi(const BbviModel& model, const BbviOptions& opt, RngHandle& rng) {
    if (model.init_lambda.size() != static_cast<std::size_t>(model.total_dim()))
        throw std::invalid_argument("run_bbvi: init_lambda size mismatch");
    if (opt.iters < 1 || opt.n_samples < 2) throw std::invalid_argument("run_bbvi: bad options");

    BbviResult res;
    res.lambda = model.init_lambda;
    res.grad_sq.assign(res.lambda.size(), 0.0);
    for (const auto& mon : model.monitors) res.trace.columns.push_back(mon.name);
    model.publish_all(res.lambda, res.moments);

    std::vector<double> grad(res.lambda.size());
    for (int it = 1; it <= opt.iters; ++it) {
        int off = 0;
        for (const auto& fac : model.factors) {
            GradientEstimate est =
                rb_gradient(fac, res.lambda.data() + off, res.moments, opt.n_samples, rng);
            const auto& use = opt.control_variates ? est.cv : est.plain;
            for (int k = 0; k < fac.dim; ++k) grad[off + k] = use[k];
            off += fac.dim;
        }
        adagrad_step(res.lambda, res.grad_sq, grad, opt.eta, opt.eps);
        for (double l : res.lambda)
            if (!(std::abs(l) <= opt.max_abs_lambda)) throw BbviDivergence(it, std::move(res.trace));
        model.publish_all(res.lambda, res.moments);
        if (!model.monitors.empty()) res.trace.append(eval_monitors(model.monitors, res.moments));
        if (opt.should_stop && opt.should_stop(it)) break;
    }
    return res;
}

}  // namespace mcvi
