#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mcvi/distributions.hpp"
#include "mcvi/mcmc.hpp"
#include "mcvi/rng.hpp"
#include "mcvi/trace.hpp"

namespace mcvi {

// Cached expectations under the current variational factors, keyed by name.
// Every block reads the expectations it needs from here and publishes its own
// after an update, so a sweep never touches raw samples of other blocks.
using Moments = std::map<std::string, double>;

struct VariationalState {
    std::vector<std::optional<Distribution>> factors;
    Moments moments;
    int sweep = 0;
};

// Block whose optimal factor is available in closed form given the cached
// expectations of all other blocks.
struct ClosedFormBlock {
    std::string name;
    std::function<Distribution(const Moments&)> update;
    std::function<void(const Distribution&, Moments&)> publish;
};

// Summary statistic accumulated from an inner-chain state vector.
struct SuffStat {
    std::string key;
    std::function<double(const std::vector<double>&)> fn;
};

// Block whose factor is intractable: its expectations are estimated by an
// inner Metropolis-within-Gibbs chain targeting the implied optimal factor.
// `conditionals` builds the per-coordinate rules from a snapshot of the
// current moment cache.
struct McmcBlock {
    std::string name;
    std::vector<double> init;
    double init_scale = 1.0;
    std::function<std::vector<CoordinateRule>(const Moments&)> conditionals;
    std::vector<SuffStat> stats;
    ConstraintCheck constraint;
};

using Block = std::variant<ClosedFormBlock, McmcBlock>;

struct Monitor {
    std::string name;
    std::function<double(const Moments&)> fn;
};

struct ModelSpec {
    std::vector<Block> blocks;
    Moments init;
    std::vector<Monitor> monitors;
    // Optional hooks. elbo_analytic evaluates the objective exactly from the
    // state; elbo_sample returns one draw of log p(z, x) - log q(z), z ~ q.
    std::function<double(const VariationalState&)> elbo_analytic;
    std::function<double(const VariationalState&, RngHandle&)> elbo_sample;
};

inline VariationalState initial_state(const ModelSpec& model) {
    VariationalState s;
    s.factors.assign(model.blocks.size(), std::nullopt);
    s.moments = model.init;
    return s;
}

inline const std::string& block_name(const ModelSpec& model, std::size_t i) {
    return std::visit([](const auto& b) -> const std::string& { return b.name; }, model.blocks[i]);
}

inline void cavi_update_block(const ModelSpec& model, VariationalState& state, std::size_t i) {
    if (i >= model.blocks.size()) throw std::invalid_argument("cavi_update_block: bad index");
    const auto* blk = std::get_if<ClosedFormBlock>(&model.blocks[i]);
    if (!blk) throw std::invalid_argument("cavi_update_block: block '" + block_name(model, i) +
                                          "' has no closed-form update");
    Distribution d = blk->update(state.moments);
    blk->publish(d, state.moments);
    state.factors[i] = std::move(d);
}

inline std::vector<double> eval_monitors(const std::vector<Monitor>& monitors, const Moments& m) {
    std::vector<double> out;
    out.reserve(monitors.size());
    for (const auto& mon : monitors) out.push_back(mon.fn(m));
    return out;
}

inline std::vector<double> eval_monitors(const ModelSpec& model, const Moments& m) {
    return eval_monitors(model.monitors, m);
}

struct NonConvergence : std::runtime_error {
    SweepTrace trace;
    NonConvergence(const std::string& msg, SweepTrace t)
        : std::runtime_error(msg), trace(std::move(t)) {}
};

struct CaviResult {
    VariationalState state;
    SweepTrace trace;
    int sweeps_to_convergence = 0;
};

// Coordinate ascent until every monitored statistic changes by less than
// rel_tol relative to its previous value. The sweep that confirms
// convergence only verifies the preceding one and is not counted, so the
// returned count is the index of the first sweep whose monitors had already
// settled.
inline CaviResult run_cavi(const ModelSpec& model, double rel_tol = 1e-4,
                           int max_sweeps = 10000) {
    for (const auto& b : model.blocks)
        if (!std::holds_alternative<ClosedFormBlock>(b))
            throw std::invalid_argument("run_cavi: model has non-closed-form blocks");
    if (model.monitors.empty()) throw std::invalid_argument("run_cavi: no monitors");

    CaviResult res;
    res.state = initial_state(model);
    for (const auto& mon : model.monitors) res.trace.columns.push_back(mon.name);

    std::vector<double> prev;
    for (int k = 1; k <= max_sweeps; ++k) {
        for (std::size_t i = 0; i < model.blocks.size(); ++i)
            cavi_update_block(model, res.state, i);
        res.state.sweep = k;
        std::vector<double> cur = eval_monitors(model, res.state.moments);
        res.trace.append(cur);
        if (k >= 2) {
            bool ok = true;
            for (std::size_t c = 0; c < cur.size(); ++c) {
                double denom = std::max(std::abs(prev[c]), 1e-300);
                if (std::abs(cur[c] - prev[c]) / denom > rel_tol) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                res.sweeps_to_convergence = k - 1;
                return res;
            }
        }
        prev = std::move(cur);
    }
    throw NonConvergence("run_cavi: no convergence within sweep cap", std::move(res.trace));
}

inline double elbo_analytic(const ModelSpec& model, const VariationalState& state) {
    if (!model.elbo_analytic)
        throw std::invalid_argument("elbo_analytic: model provides no analytic objective");
    return model.elbo_analytic(state);
}

struct ElboEstimate {
    double mean = 0.0;
    double se = 0.0;
    int n = 0;
};

inline ElboEstimate elbo_mc(const ModelSpec& model, const VariationalState& state, int n_samples,
                            RngHandle& rng) {
    if (!model.elbo_sample)
        throw std::invalid_argument("elbo_mc: model provides no sampling hook");
    if (n_samples < 2) throw std::invalid_argument("elbo_mc: need at least 2 samples");
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        double v = model.elbo_sample(state, rng);
        double delta = v - mean;
        mean += delta / (i + 1);
        m2 += delta * (v - mean);
    }
    ElboEstimate e;
    e.n = n_samples;
    e.mean = mean;
    e.se = std::sqrt(m2 / (n_samples - 1) / n_samples);
    return e;
}

}  // namespace mcvi
