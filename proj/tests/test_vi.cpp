#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "mcvi/models/model1.hpp"
#include "mcvi/trace.hpp"
#include "mcvi/vi.hpp"
#include "oracles.hpp"

using namespace mcvi;

namespace {

model1::Data test_data() {
    RngHandle rng(11);
    return model1::generate(1000, 10.0, 100.0, rng);
}

}  // namespace

TEST_CASE("sweep trace csv round trip, determinism, burn-in summary") {
    SweepTrace t;
    t.columns = {"a", "b"};
    t.append({1.0, -0.5}, 0.01);
    t.append({2.0, 1.0 / 3.0}, 0.02);
    t.append({4.0, 0.125}, 0.03);

    std::string csv = t.to_csv();
    CHECK(csv.substr(0, 10) == "sweep,a,b\n");
    std::istringstream in(csv);
    SweepTrace back = SweepTrace::from_csv(in);
    REQUIRE(back.columns == t.columns);
    REQUIRE(back.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t c = 0; c < 2; ++c) CHECK(back.rows[i][c] == t.rows[i][c]);
    CHECK(back.to_csv() == csv);

    TraceSummary s = summarize_trace(t, 1);
    CHECK(s.used_rows == 2);
    CHECK(s.mean[0] == Catch::Approx(3.0).epsilon(1e-15));
    CHECK(s.sd[0] == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(s.mean[1] == Catch::Approx((1.0 / 3.0 + 0.125) / 2.0).epsilon(1e-15));

    CHECK_THROWS_AS(t.append({1.0}), std::invalid_argument);
}

TEST_CASE("mc elbo on a two-point latent recovers the evidence") {
    // z ~ Bern(0.3), p(x|z=1) = 0.7, p(x|z=0) = 0.2, so p(x) = 0.35 and the
    // posterior is q(z=1) = 0.6. With q equal to the posterior every draw of
    // log p(z,x) - log q(z) equals log p(x) exactly.
    auto toy = [](double q1) {
        ModelSpec m;
        m.elbo_sample = [q1](const VariationalState&, RngHandle& rng) {
            bool z = rng.uniform01() < q1;
            double logp = z ? std::log(0.3 * 0.7) : std::log(0.7 * 0.2);
            double logq = std::log(z ? q1 : 1.0 - q1);
            return logp - logq;
        };
        return m;
    };

    VariationalState dummy;
    RngHandle rng(42);
    ElboEstimate exact = elbo_mc(toy(0.6), dummy, 1000, rng);
    CHECK(exact.mean == Catch::Approx(std::log(0.35)).margin(1e-12));
    CHECK(exact.se < 1e-12);

    // q != posterior: estimator centers on log p(x) - KL(q || posterior)
    double q1 = 0.4;
    double kl = q1 * std::log(q1 / 0.6) + (1 - q1) * std::log((1 - q1) / 0.4);
    ElboEstimate off = elbo_mc(toy(q1), dummy, 200000, rng);
    CHECK(off.se > 0.0);
    CHECK(std::abs(off.mean - (std::log(0.35) - kl)) < 3.0 * off.se);

    ModelSpec hookless;
    CHECK_THROWS_AS(elbo_mc(hookless, dummy, 100, rng), std::invalid_argument);
    CHECK_THROWS_AS(elbo_analytic(hookless, dummy), std::invalid_argument);
}

TEST_CASE("model1 first sweep reproduces the closed-form optimum") {
    model1::Data d = test_data();
    ModelSpec spec = model1::cavi_spec(d);
    VariationalState st = initial_state(spec);

    cavi_update_block(spec, st, 0);
    REQUIRE(st.factors[0].has_value());
    const auto& g = std::get<GammaDist>(*st.factors[0]);
    CHECK(g.shape == 501.5);
    CHECK(g.rate == 1.0 + d.sumsq / 2.0);
    CHECK(st.moments.at("E_tau") == Catch::Approx(501.5 / (1.0 + d.sumsq / 2.0)).epsilon(1e-15));

    cavi_update_block(spec, st, 1);
    const auto& q = std::get<Normal>(*st.factors[1]);
    CHECK(q.mean == d.sum / 1001.0);
    double prec = 1001.0 * (501.5 / (1.0 + d.sumsq / 2.0));
    CHECK(q.var == Catch::Approx(1.0 / prec).epsilon(1e-15));
    CHECK(st.moments.at("E_vartheta2") ==
          Catch::Approx(q.mean * q.mean + q.var).epsilon(1e-15));
}

TEST_CASE("model1 cavi converges in three sweeps to the fixed point") {
    model1::Data d = test_data();
    CaviResult res = run_cavi(model1::cavi_spec(d), 1e-4);

    CHECK(res.sweeps_to_convergence == 3);
    REQUIRE(res.trace.rows.size() == 4);

    // the confirming sweep is the first whose monitors moved by < rel_tol
    std::size_t th = 1;  // theta column
    auto rel = [&](std::size_t i, std::size_t c) {
        return std::abs(res.trace.rows[i][c] - res.trace.rows[i - 1][c]) /
               std::abs(res.trace.rows[i - 1][c]);
    };
    CHECK(rel(2, th) > 1e-4);
    CHECK(rel(3, th) < 1e-4);

    // independent scalar recursion: eliminating the vartheta step gives
    // zeta_{k+1} = C + zeta_k / 1003 with C = 1 + (1001 m^2 - 2 S1 m + S2)/2
    double m = d.sum / 1001.0;
    double C = 1.0 + (1001.0 * m * m - 2.0 * d.sum * m + d.sumsq) / 2.0;
    double z = 1.0 + d.sumsq / 2.0;
    for (int k = 2; k <= 4; ++k) z = C + z / 1003.0;

    const auto& g = std::get<GammaDist>(*res.state.factors[0]);
    CHECK(g.shape == 501.5);
    CHECK(g.rate == Catch::Approx(z).epsilon(1e-12));
    double zstar = 1003.0 * C / 1002.0;
    CHECK(std::abs(g.rate - zstar) / zstar < 1e-8);

    const auto& q = std::get<Normal>(*res.state.factors[1]);
    CHECK(q.mean == d.sum / 1001.0);
    CHECK(q.var == Catch::Approx(g.rate / (1001.0 * 501.5)).epsilon(1e-12));

    // at the fixed point the variational mean of tau equals the exact
    // posterior mean: 501.5 / (1003 C / 1002) = 501 / C and C = b
    GammaDist post = model1::posterior_tau(d);
    CHECK(post.shape == 501.0);
    CHECK(res.state.moments.at("E_tau") ==
          Catch::Approx(post.shape / post.rate).epsilon(1e-9));
}

TEST_CASE("model1 posterior_tau matches two-dimensional quadrature") {
    model1::Data d = test_data();
    GammaDist post = model1::posterior_tau(d);
    double et = post.shape / post.rate;
    double sd_t = std::sqrt(post.shape) / post.rate;
    double mv = d.sum / 1001.0;
    double sd_v = 1.0 / std::sqrt(1001.0 * et);

    auto logj = [&](double tau, double th) { return model1::log_joint(d, tau, th); };
    double ref = logj(et, mv);
    double mass = 0.0, tmom = 0.0;
    int nt = 600, nv = 600;
    double t_lo = et - 8 * sd_t, t_hi = et + 8 * sd_t;
    double v_lo = mv - 8 * sd_v, v_hi = mv + 8 * sd_v;
    for (int i = 0; i <= nt; ++i) {
        double tau = t_lo + (t_hi - t_lo) * i / nt;
        double wi = (i == 0 || i == nt) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        double inner = oracle::simpson(
            [&](double th) { return std::exp(logj(tau, th) - ref); }, v_lo, v_hi, nv);
        mass += wi * inner;
        tmom += wi * tau * inner;
    }
    double e_quad = tmom / mass;
    CHECK(e_quad == Catch::Approx(et).epsilon(1e-6));
}

TEST_CASE("model1 elbo is monotone along coordinate updates") {
    model1::Data d = test_data();
    ModelSpec spec = model1::cavi_spec(d);
    VariationalState st = initial_state(spec);

    cavi_update_block(spec, st, 0);
    cavi_update_block(spec, st, 1);
    double prev = elbo_analytic(spec, st);
    for (int k = 2; k <= 8; ++k) {
        for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
            cavi_update_block(spec, st, i);
            double cur = elbo_analytic(spec, st);
            CHECK(cur >= prev - 1e-9 * std::abs(prev));
            prev = cur;
        }
    }
}

TEST_CASE("model1 mc elbo brackets the analytic value") {
    model1::Data d = test_data();
    ModelSpec spec = model1::cavi_spec(d);
    CaviResult res = run_cavi(spec, 1e-10);
    double exact = elbo_analytic(spec, res.state);

    RngHandle rng(7);
    ElboEstimate est = elbo_mc(spec, res.state, 100000, rng);
    CHECK(est.se > 0.0);
    CHECK(std::abs(est.mean - exact) < 3.0 * est.se);
}

TEST_CASE("run_cavi reports non-convergence carrying the trace") {
    ModelSpec spec;
    spec.blocks.push_back(ClosedFormBlock{
        "flip",
        [](const Moments& m) -> Distribution { return Normal{-m.at("s"), 1.0}; },
        [](const Distribution& dist, Moments& m) { m["s"] = std::get<Normal>(dist).mean; }});
    spec.init = {{"s", 1.0}};
    spec.monitors = {{"s", [](const Moments& m) { return m.at("s"); }}};

    try {
        run_cavi(spec, 1e-4, 37);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.trace.rows.size() == 37);
        REQUIRE(e.trace.columns.size() == 1);
        CHECK(e.trace.columns[0] == "s");
        CHECK(e.trace.rows[5][0] == 1.0);
        CHECK(e.trace.rows[6][0] == -1.0);
    }
}

TEST_CASE("closed-form-only preconditions are enforced") {
    model1::Data d = test_data();
    ModelSpec mc = model1::mc_spec(d);
    VariationalState st = initial_state(mc);
    CHECK_THROWS_AS(cavi_update_block(mc, st, 0), std::invalid_argument);
    CHECK_THROWS_AS(run_cavi(mc), std::invalid_argument);

    ModelSpec nomon = model1::cavi_spec(d);
    nomon.monitors.clear();
    CHECK_THROWS_AS(run_cavi(nomon), std::invalid_argument);
}
