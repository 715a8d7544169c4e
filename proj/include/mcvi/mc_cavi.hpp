#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "mcvi/mcmc.hpp"
#include "mcvi/vi.hpp"

namespace mcvi {

// Inner-sample schedule: N = first_n for the first switch_after sweeps,
// N = later_n afterwards. Small early chains are cheap warm-up; the larger
// later value controls the Monte Carlo error at the plateau.
struct McSchedule {
    int first_n;
    int switch_after;
    int later_n;

    McSchedule(int a, int b, int c) : first_n(a), switch_after(b), later_n(c) {
        if (a < 1 || b < 0 || c < a)
            throw std::invalid_argument("McSchedule: need first_n >= 1, switch_after >= 0, later_n >= first_n");
    }

    int n_at(int sweep) const { return sweep <= switch_after ? first_n : later_n; }
};

// Advance the block's inner chain n_samples steps against the conditionals
// implied by the moment snapshot and return the running averages of its
// summary statistics. Only per-statistic accumulators are kept; no sample set
// is ever stored. The first `burn` steps move the chain without accumulating.
inline Moments estimate_block_expectations(const McmcBlock& blk, const Moments& snapshot,
                                           ChainState& chain, int n_samples, RngHandle& rng,
                                           int burn = 0) {
    if (n_samples < 1) throw std::invalid_argument("estimate_block_expectations: n_samples < 1");
    auto rules = blk.conditionals(snapshot);
    for (int t = 0; t < burn; ++t) mwg_sweep(chain, rules, rng, blk.constraint);
    std::vector<double> acc(blk.stats.size(), 0.0);
    for (int t = 0; t < n_samples; ++t) {
        mwg_sweep(chain, rules, rng, blk.constraint);
        for (std::size_t s = 0; s < blk.stats.size(); ++s)
            acc[s] += blk.stats[s].fn(chain.values);
    }
    Moments out;
    for (std::size_t s = 0; s < blk.stats.size(); ++s)
        out[blk.stats[s].key] = acc[s] / n_samples;
    return out;
}

inline std::vector<ChainState> make_inner_chains(const ModelSpec& model) {
    std::vector<ChainState> chains;
    chains.reserve(model.blocks.size());
    for (const auto& b : model.blocks) {
        if (const auto* mc = std::get_if<McmcBlock>(&b))
            chains.emplace_back(mc->init, mc->init_scale);
        else
            chains.emplace_back(std::vector<double>{}, 1.0);
    }
    return chains;
}

// One outer sweep: closed-form blocks take their exact coordinate update,
// chain blocks publish Monte Carlo estimates of their expectations.
inline void mc_cavi_sweep(const ModelSpec& model, VariationalState& state,
                          std::vector<ChainState>& chains, int n_samples, RngHandle& rng,
                          int inner_burn = 0) {
    for (std::size_t i = 0; i < model.blocks.size(); ++i) {
        if (const auto* mc = std::get_if<McmcBlock>(&model.blocks[i])) {
            Moments est =
                estimate_block_expectations(*mc, state.moments, chains[i], n_samples, rng, inner_burn);
            for (const auto& [key, val] : est) state.moments[key] = val;
        } else {
            cavi_update_block(model, state, i);
        }
    }
    ++state.sweep;
}

struct McCaviOptions {
    McSchedule schedule{10, 0, 10};
    int sweeps = 100;
    bool cold_restart = false;
    int inner_burn = 0;
    std::function<bool(int)> should_stop;  // checked once per completed sweep
};

struct McCaviResult {
    VariationalState state;
    SweepTrace trace;
    std::vector<ChainState> chains;
};

inline McCaviResult run_mc_cavi(const ModelSpec& model, const McCaviOptions& opt, RngHandle& rng) {
    if (opt.sweeps < 1) throw std::invalid_argument("run_mc_cavi: sweeps < 1");
    if (model.monitors.empty()) throw std::invalid_argument("run_mc_cavi: no monitors");

    McCaviResult res;
    res.state = initial_state(model);
    res.chains = make_inner_chains(model);
    for (const auto& mon : model.monitors) res.trace.columns.push_back(mon.name);

    using clock = std::chrono::steady_clock;
    for (int k = 1; k <= opt.sweeps; ++k) {
        auto t0 = clock::now();
        if (opt.cold_restart) res.chains = make_inner_chains(model);
        mc_cavi_sweep(model, res.state, res.chains, opt.schedule.n_at(k), rng, opt.inner_burn);
        double secs = std::chrono::duration<double>(clock::now() - t0).count();
        res.trace.append(eval_monitors(model, res.state.moments), secs);
        if (opt.should_stop && opt.should_stop(k)) break;
    }
    return res;
}

// True when the last `window` values sit inside a +-rel_band tube around
// their own mean; a cheap stationarity check for monitored statistics.
inline bool plateau_detect(const std::vector<double>& values, std::size_t window,
                           double rel_band) {
    if (window < 2 || values.size() < window) return false;
    double mu = 0.0;
    for (std::size_t i = values.size() - window; i < values.size(); ++i) mu += values[i];
    mu /= double(window);
    double tube = rel_band * std::max(std::abs(mu), 1e-300);
    for (std::size_t i = values.size() - window; i < values.size(); ++i)
        if (std::abs(values[i] - mu) > tube) return false;
    return true;
}

// Stopping rule on the Monte Carlo objective increment: replicate a candidate
// update `reps` times from the same state, look at the spread of the ELBO
// change, and stop once the spread is small and the mean change is buried in
// it. update_fn(state, rng) must return the post-update state.
struct DeltaElboResult {
    double mu = 0.0;
    double sigma = 0.0;
    bool stop = false;
};

template <typename UpdateFn>
DeltaElboResult delta_elbo_rule(const ModelSpec& model, const VariationalState& state,
                                UpdateFn&& update_fn, int reps, double nu, double k_factor,
                                RngHandle& rng) {
    if (reps < 2) throw std::invalid_argument("delta_elbo_rule: reps < 2");
    double base = elbo_analytic(model, state);
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        RngHandle child = rng.child(static_cast<std::uint64_t>(r));
        VariationalState next = update_fn(state, child);
        double delta = elbo_analytic(model, next) - base;
        double d = delta - mean;
        mean += d / (r + 1);
        m2 += d * (delta - mean);
    }
    DeltaElboResult out;
    out.mu = mean;
    out.sigma = std::sqrt(m2 / (reps - 1));
    out.stop = out.sigma <= nu && std::abs(out.mu) < k_factor * out.sigma;
    return out;
}

}  // namespace mcvi
