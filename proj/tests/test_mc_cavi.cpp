#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "mcvi/mc_cavi.hpp"
#include "mcvi/models/model1.hpp"

using namespace mcvi;

namespace {

model1::Data test_data() {
    RngHandle rng(11);
    return model1::generate(1000, 10.0, 100.0, rng);
}

double cavi_fixed_point_e_tau(const model1::Data& d) {
    return run_cavi(model1::cavi_spec(d), 1e-12).state.moments.at("E_tau");
}

double trailing_mean(const SweepTrace& t, std::size_t col, std::size_t window) {
    return summarize_trace(t, t.rows.size() - window).mean[col];
}

}  // namespace

TEST_CASE("schedule validates and switches at the configured sweep") {
    McSchedule s(10, 10, 100000);
    CHECK(s.n_at(1) == 10);
    CHECK(s.n_at(10) == 10);
    CHECK(s.n_at(11) == 100000);
    CHECK(McSchedule(7, 0, 7).n_at(1) == 7);
    CHECK_THROWS_AS(McSchedule(0, 10, 10), std::invalid_argument);
    CHECK_THROWS_AS(McSchedule(10, -1, 10), std::invalid_argument);
    CHECK_THROWS_AS(McSchedule(10, 10, 9), std::invalid_argument);
}

TEST_CASE("block estimator keeps running averages only") {
    auto seen = std::make_shared<std::vector<double>>();
    McmcBlock blk;
    blk.name = "z";
    blk.init = {0.0};
    blk.conditionals = [](const Moments&) {
        return std::vector<CoordinateRule>{
            GibbsRule{[](const std::vector<double>&) -> Distribution { return Normal{0.0, 1.0}; }}};
    };
    blk.stats = {{"m1",
                  [seen](const std::vector<double>& s) {
                      seen->push_back(s[0]);
                      return s[0];
                  }},
                 {"m2", [](const std::vector<double>& s) { return s[0] * s[0]; }}};

    ChainState chain(blk.init);
    RngHandle rng(3);
    Moments est = estimate_block_expectations(blk, {}, chain, 500, rng);

    REQUIRE(seen->size() == 500);
    double acc = 0.0;
    for (double v : *seen) acc += v;
    CHECK(est.at("m1") == acc / 500);
    CHECK(est.at("m2") == Catch::Approx(1.0).margin(0.15));

    // burn steps advance the chain without touching the accumulators
    seen->clear();
    ChainState chain2(blk.init);
    estimate_block_expectations(blk, {}, chain2, 40, rng, 100);
    CHECK(seen->size() == 40);

    CHECK_THROWS_AS(estimate_block_expectations(blk, {}, chain, 0, rng), std::invalid_argument);
}

TEST_CASE("model1 mc variant with a large inner budget tracks the cavi fixed point") {
    model1::Data d = test_data();
    double e_star = cavi_fixed_point_e_tau(d);

    McCaviOptions opt{McSchedule(20000, 0, 20000)};
    opt.sweeps = 10;
    RngHandle rng(17);
    McCaviResult res = run_mc_cavi(model1::mc_spec(d), opt, rng);

    REQUIRE(res.trace.rows.size() == 10);
    double e_hat = res.state.moments.at("E_tau");
    CHECK(std::abs(e_hat - e_star) / e_star < 0.01);
    CHECK(std::abs(e_hat - e_star) < 1e-4);

    // the vartheta factor follows the noisy estimate through the exact update
    const auto& q = std::get<Normal>(*res.state.factors[1]);
    CHECK(q.var == Catch::Approx(1.0 / (1001.0 * e_hat)).epsilon(1e-12));
}

TEST_CASE("warm-started chains match cold restarts that pay for burn-in") {
    model1::Data d = test_data();
    double e_star = cavi_fixed_point_e_tau(d);
    ModelSpec spec = model1::mc_spec(d);
    std::size_t col = 2;  // E_tau

    McCaviOptions warm{McSchedule(2000, 0, 2000)};
    warm.sweeps = 60;
    RngHandle r1(101);
    double warm_mean = trailing_mean(run_mc_cavi(spec, warm, r1).trace, col, 20);

    McCaviOptions cold = warm;
    cold.cold_restart = true;
    cold.inner_burn = 500;
    RngHandle r2(202);
    double cold_mean = trailing_mean(run_mc_cavi(spec, cold, r2).trace, col, 20);

    CHECK(std::abs(warm_mean - e_star) < 2e-4);
    CHECK(std::abs(cold_mean - e_star) < 2e-4);
    CHECK(std::abs(warm_mean - cold_mean) < 3e-4);

    // without burn-in a cold chain drags its transient into every sweep's
    // average, biasing the estimate high; warm starts are what remove it
    McCaviOptions naive = warm;
    naive.cold_restart = true;
    RngHandle r3(303);
    double naive_mean = trailing_mean(run_mc_cavi(spec, naive, r3).trace, col, 20);
    CHECK(naive_mean > e_star * 1.15);
}

TEST_CASE("inner-sample growth shrinks the error at a fixed sweep") {
    model1::Data d = test_data();
    double e_star = cavi_fixed_point_e_tau(d);
    ModelSpec spec = model1::mc_spec(d);

    auto median_err = [&](int n_inner) {
        std::vector<double> errs;
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            McCaviOptions opt{McSchedule(n_inner, 0, n_inner)};
            opt.sweeps = 50;
            RngHandle rng(seed);
            McCaviResult res = run_mc_cavi(spec, opt, rng);
            errs.push_back(std::abs(res.trace.rows[49][2] - e_star));
        }
        std::sort(errs.begin(), errs.end());
        return 0.5 * (errs[2] + errs[3]);
    };

    double m10 = median_err(10);
    double m1000 = median_err(1000);
    CHECK(m10 > m1000);
    CHECK(m1000 < 1e-3);
}

TEST_CASE("plateau_detect flags settled tails only") {
    std::vector<double> flat = {5.0, 1.0, 1.0001, 0.9999, 1.00005, 0.99995};
    CHECK(plateau_detect(flat, 5, 1e-3));
    CHECK_FALSE(plateau_detect(flat, 6, 1e-3));

    std::vector<double> trend;
    for (int i = 0; i < 30; ++i) trend.push_back(1.0 + 0.01 * i);
    CHECK_FALSE(plateau_detect(trend, 10, 1e-3));
    CHECK(plateau_detect(trend, 10, 0.1));

    CHECK_FALSE(plateau_detect({1.0, 1.0}, 5, 1e-3));
    CHECK_FALSE(plateau_detect({1.0, 1.0, 1.0}, 1, 1e-3));
}

TEST_CASE("delta-elbo rule stops at the optimum and keeps going far from it") {
    model1::Data d = test_data();
    ModelSpec spec = model1::mc_spec(d);
    CaviResult fixed = run_cavi(model1::cavi_spec(d), 1e-12);

    // warmed inner chain sitting on the settled factor
    std::vector<ChainState> chains = make_inner_chains(spec);
    chains[0].values[0] = fixed.state.moments.at("E_tau");
    {
        RngHandle wr(9);
        estimate_block_expectations(std::get<McmcBlock>(spec.blocks[0]), fixed.state.moments,
                                    chains[0], 200, wr);
    }

    auto one_sweep = [&](const VariationalState& st, RngHandle& rng) {
        VariationalState next = st;
        std::vector<ChainState> ch = chains;
        mc_cavi_sweep(spec, next, ch, 5000, rng);
        return next;
    };

    RngHandle rng(31);
    DeltaElboResult at_opt = delta_elbo_rule(spec, fixed.state, one_sweep, 30, 1e-4, 3.0, rng);
    CHECK(at_opt.stop);
    CHECK(at_opt.sigma <= 1e-4);
    // no replicate can improve on the coordinate optimum
    CHECK(at_opt.mu < 1e-8);

    // early state: one noisy sweep from scratch, still far uphill
    VariationalState early = initial_state(spec);
    std::vector<ChainState> early_chains = make_inner_chains(spec);
    RngHandle er(77);
    mc_cavi_sweep(spec, early, early_chains, 200, er);
    auto one_sweep_early = [&](const VariationalState& st, RngHandle& rng2) {
        VariationalState next = st;
        std::vector<ChainState> ch = early_chains;
        mc_cavi_sweep(spec, next, ch, 200, rng2);
        return next;
    };
    // one sweep already fixes the vartheta mean exactly, so the remaining
    // ascent is small in absolute terms but clearly outside the noise band
    DeltaElboResult far = delta_elbo_rule(spec, early, one_sweep_early, 30, 1e-4, 3.0, rng);
    CHECK_FALSE(far.stop);
    CHECK(far.mu > 1e-3);
    CHECK(far.mu > 3.0 * far.sigma);
}

TEST_CASE("mc-cavi runs are seed-deterministic and honor the stop callback") {
    model1::Data d = test_data();
    ModelSpec spec = model1::mc_spec(d);

    McCaviOptions opt{McSchedule(50, 5, 200)};
    opt.sweeps = 12;
    RngHandle a(5), b(5), c(6);
    std::string ta = run_mc_cavi(spec, opt, a).trace.to_csv();
    std::string tb = run_mc_cavi(spec, opt, b).trace.to_csv();
    std::string tc = run_mc_cavi(spec, opt, c).trace.to_csv();
    CHECK(ta == tb);
    CHECK(ta != tc);

    McCaviOptions stopper = opt;
    stopper.should_stop = [](int k) { return k >= 3; };
    RngHandle e(5);
    CHECK(run_mc_cavi(spec, stopper, e).trace.rows.size() == 3);
}
