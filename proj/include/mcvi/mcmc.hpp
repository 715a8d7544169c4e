#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mcvi/distributions.hpp"

namespace mcvi {

struct MhProposal {
    enum class Kind {
        RwNormal,       // y = x + scale * z
        RwLogNormal,    // y = x * exp(scale * z), Jacobian-corrected
        IndepUniform,   // y ~ U(lower, upper)
        RwTruncNormal,  // y ~ TN(x, scale^2, lower, upper), Hastings-corrected
    };
    Kind kind = Kind::RwNormal;
    double scale = 1.0;
    double lower = -kInf;
    double upper = kInf;
};

struct MhResult {
    double value;
    bool accepted;
};

// One Metropolis-Hastings step for a scalar coordinate. `log_target` may
// return -inf outside the support; such proposals are rejected.
template <class LogTarget>
MhResult mh_update(double current, const MhProposal& p, LogTarget&& log_target, RngHandle& rng) {
    double cand, correction = 0.0;
    switch (p.kind) {
        case MhProposal::Kind::RwNormal:
            cand = current + p.scale * rng.normal01();
            break;
        case MhProposal::Kind::RwLogNormal:
            cand = current * std::exp(p.scale * rng.normal01());
            correction = std::log(cand) - std::log(current);
            break;
        case MhProposal::Kind::IndepUniform:
            cand = rng.uniform(p.lower, p.upper);
            break;
        case MhProposal::Kind::RwTruncNormal: {
            cand = sample(Distribution(TruncatedNormal(current, p.scale * p.scale, p.lower, p.upper)), rng);
            auto logz = [&](double c) {
                return normal_log_cdf_diff((p.lower - c) / p.scale, (p.upper - c) / p.scale);
            };
            correction = logz(current) - logz(cand);
            break;
        }
        default:
            throw std::logic_error("mh_update: unknown proposal kind");
    }
    double lt_cand = log_target(cand);
    if (lt_cand == -kInf) return {current, false};
    double log_alpha = lt_cand - log_target(current) + correction;
    if (log_alpha >= 0.0 || std::log(rng.uniform01()) < log_alpha) return {cand, true};
    return {current, false};
}

inline double adapt_scale(double scale, double observed_rate, double target_rate) {
    return scale * std::exp(observed_rate - target_rate);
}

struct GibbsRule {
    std::function<Distribution(const std::vector<double>&)> conditional;
};

struct MhRule {
    std::function<double(double, const std::vector<double>&)> log_conditional;
    MhProposal proposal;
};

using CoordinateRule = std::variant<GibbsRule, MhRule>;

// Coordinate-wise sampler state. Scales adapt in batches of 50 proposals per
// coordinate towards `adapt_target` until `adapting` is cleared.
struct ChainState {
    std::vector<double> values;
    std::vector<double> scales;
    std::vector<std::int64_t> batch_accepts, batch_proposals;
    std::vector<std::int64_t> total_accepts, total_proposals;
    bool adapting = true;
    int adapt_batch = 50;
    double adapt_target = 0.45;

    explicit ChainState(std::vector<double> init, double init_scale = 1.0)
        : values(std::move(init)),
          scales(values.size(), init_scale),
          batch_accepts(values.size(), 0),
          batch_proposals(values.size(), 0),
          total_accepts(values.size(), 0),
          total_proposals(values.size(), 0) {}

    double acceptance_rate(std::size_t c) const {
        return total_proposals[c] ? double(total_accepts[c]) / double(total_proposals[c]) : 0.0;
    }
};

using ConstraintCheck = std::function<bool(const std::vector<double>&)>;

// One deterministic-order sweep over all coordinates.
inline void mwg_sweep(ChainState& chain, const std::vector<CoordinateRule>& rules, RngHandle& rng,
                      const ConstraintCheck& constraint = nullptr) {
    if (rules.size() != chain.values.size())
        throw std::invalid_argument("mwg_sweep: rule/state size mismatch");
    for (std::size_t c = 0; c < rules.size(); ++c) {
        if (const auto* g = std::get_if<GibbsRule>(&rules[c])) {
            chain.values[c] = sample(g->conditional(chain.values), rng);
        } else {
            const auto& m = std::get<MhRule>(rules[c]);
            MhProposal prop = m.proposal;
            prop.scale = chain.scales[c];
            auto res = mh_update(
                chain.values[c], prop,
                [&](double x) { return m.log_conditional(x, chain.values); }, rng);
            chain.values[c] = res.value;
            chain.batch_proposals[c] += 1;
            chain.total_proposals[c] += 1;
            if (res.accepted) {
                chain.batch_accepts[c] += 1;
                chain.total_accepts[c] += 1;
            }
            if (chain.adapting && chain.batch_proposals[c] >= chain.adapt_batch) {
                double rate = double(chain.batch_accepts[c]) / double(chain.batch_proposals[c]);
                double s = adapt_scale(chain.scales[c], rate, chain.adapt_target);
                // keep the walk non-degenerate; past ~the support width the
                // bounded proposals are already effectively uniform
                double hi_cap = 1e12;
                if (m.proposal.lower > -kInf && m.proposal.upper < kInf)
                    hi_cap = 100.0 * (m.proposal.upper - m.proposal.lower);
                chain.scales[c] = std::clamp(s, 1e-12, hi_cap);
                chain.batch_accepts[c] = 0;
                chain.batch_proposals[c] = 0;
            }
        }
        if (constraint && !constraint(chain.values))
            throw std::logic_error("mwg_sweep: constraint violated after coordinate update");
    }
}

}  // namespace mcvi
