#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mcvi/mc_cavi.hpp"
#include "mcvi/models/model2.hpp"
#include "oracles.hpp"

using namespace mcvi;

namespace {

model2::Data small_data() {
    RngHandle rng(5);
    return model2::generate(30, 6.0, 3.0, rng);
}

}  // namespace

TEST_CASE("model2 generate centers y on the shifted mean") {
    RngHandle rng(5);
    model2::Data d = model2::generate(200, 6.0, 3.0, rng);
    REQUIRE(d.n() == 200);
    oracle::RunningMoments resid;
    for (int j = 0; j < d.n(); ++j)
        resid.add(d.y[j] - 6.0 - model2::smooth_shift(j, d.n()));
    CHECK(std::abs(resid.mean()) < 3.0 * std::sqrt(1.0 / 3.0 / 200));
    CHECK(resid.var() == Catch::Approx(1.0 / 3.0).margin(0.12));
    CHECK(model2::smooth_shift(0, 200) == Catch::Approx(0.0).margin(1e-12));
    CHECK(model2::smooth_shift(50, 200) == Catch::Approx(0.0).margin(1e-9));  // sin(-2pi+pi)
    CHECK(model2::smooth_shift(25, 200) == Catch::Approx(1.5 * std::sin(0.5 * kPi)).epsilon(1e-12));
}

TEST_CASE("model2 mcmc conditionals match hand-built formulas at a pinned state") {
    model2::Data d = model2::Data::from_values({1.0, -0.5, 2.0, 0.3});
    int n = 4;
    std::vector<double> s(2 * n + 2);
    s[model2::idx_vartheta()] = 0.7;
    double kap[4] = {0.1, -0.2, 0.3, 0.0};
    double psi[4] = {0.5, 0.9, 1.2, 0.4};
    for (int j = 0; j < n; ++j) {
        s[model2::idx_kappa(j)] = kap[j];
        s[model2::idx_psi(n, j)] = psi[j];
    }
    s[model2::idx_theta(n)] = 2.5;

    auto rules = model2::mcmc_rules(d);
    REQUIRE(rules.size() == 10);

    const auto& vt = std::get<GibbsRule>(rules[0]).conditional(s);
    const auto& vt_n = std::get<Normal>(vt);
    CHECK(vt_n.mean == Catch::Approx(2.6 * 2.5 / 10.1).epsilon(1e-14));
    CHECK(vt_n.var == Catch::Approx(1.0 / 10.1).epsilon(1e-14));

    const auto& k1 = std::get<GibbsRule>(rules[2]).conditional(s);
    const auto& k1_tn = std::get<TruncatedNormal>(k1);
    CHECK(k1_tn.mean == Catch::Approx(-1.2 * 2.5 / 2.6).epsilon(1e-14));
    CHECK(k1_tn.var == Catch::Approx(1.0 / 2.6).epsilon(1e-14));
    CHECK(k1_tn.lower == -0.9);
    CHECK(k1_tn.upper == 0.9);

    const auto& th = std::get<GibbsRule>(rules[n + 1]).conditional(s);
    const auto& th_g = std::get<GammaDist>(th);
    CHECK(th_g.shape == Catch::Approx(3.0).epsilon(1e-14));
    CHECK(th_g.rate == Catch::Approx(2.1).epsilon(1e-12));

    // psi_2 conditional: truncated-normal prior kernel over the kappa-prior
    // normalizer, hard-constrained to (|kappa_2|, 2); Z via erf is an
    // independent route to the Phi difference
    const auto& p2 = std::get<MhRule>(rules[n + 2 + 2]);
    double at = 1.0;
    double expect = -(at - 0.05) * (at - 0.05) / 20.0 - std::log(std::erf(at / std::sqrt(20.0)));
    CHECK(p2.log_conditional(at, s) == Catch::Approx(expect).epsilon(1e-12));
    CHECK(p2.log_conditional(0.25, s) == -kInf);  // below |kappa_2| = 0.3
    CHECK(p2.log_conditional(2.0, s) == -kInf);
    CHECK(p2.proposal.kind == MhProposal::Kind::IndepUniform);
    CHECK(p2.proposal.lower == 0.0);
    CHECK(p2.proposal.upper == 2.0);
}

TEST_CASE("model2 mcmc keeps the constraint and finds the location") {
    model2::Data d = small_data();
    int n = d.n();
    auto rules = model2::mcmc_rules(d);
    auto check = model2::mcmc_constraint(d);
    ChainState chain = model2::mcmc_init(d);
    RngHandle rng(23);

    oracle::RunningMoments vt;
    for (int sweep = 0; sweep < 3000; ++sweep) {
        mwg_sweep(chain, rules, rng, check);
        if (sweep >= 1500) vt.add(chain.values[model2::idx_vartheta()]);
    }
    CHECK(std::abs(vt.mean() - 6.0) < 0.6);
    CHECK(vt.var() > 0.0);

    for (int j = 0; j < n; ++j) {
        double a = chain.acceptance_rate(model2::idx_psi(n, j));
        CHECK(a > 0.02);
        CHECK(a < 0.98);
    }
}

TEST_CASE("model2 mc-cavi closed-form blocks match hand oracles") {
    model2::Data d = model2::Data::from_values({1.0, -0.5, 2.0});
    ModelSpec spec = model2::mc_spec(d);
    REQUIRE(spec.blocks.size() == 5);  // 3 pairs + vartheta + theta

    Moments m = {{"E_theta", 2.0},   {"E_vartheta", 0.5}, {"E_vartheta2", 0.35},
                 {"E_kappa_0", 0.1}, {"E_kappa_1", -0.2}, {"E_kappa_2", 0.3},
                 {"E_kappa2_0", 0.2}, {"E_kappa2_1", 0.3}, {"E_kappa2_2", 0.4}};

    const auto& vt_blk = std::get<ClosedFormBlock>(spec.blocks[3]);
    const auto& vt = std::get<Normal>(vt_blk.update(m));
    // sum of y_j - E(kappa_j) = 0.9 + (-0.3) + 1.7 = 2.3, prec = 0.1 + 3*2
    CHECK(vt.mean == Catch::Approx(2.3 * 2.0 / 6.1).epsilon(1e-14));
    CHECK(vt.var == Catch::Approx(1.0 / 6.1).epsilon(1e-14));

    const auto& th_blk = std::get<ClosedFormBlock>(spec.blocks[4]);
    const auto& th = std::get<GammaDist>(th_blk.update(m));
    double ss = 0.0;
    double y[3] = {1.0, -0.5, 2.0};
    double ek[3] = {0.1, -0.2, 0.3};
    double ek2[3] = {0.2, 0.3, 0.4};
    for (int j = 0; j < 3; ++j)
        ss += y[j] * y[j] - 2 * y[j] * 0.5 - 2 * y[j] * ek[j] + 0.35 + 2 * 0.5 * ek[j] + ek2[j];
    CHECK(th.shape == Catch::Approx(2.5).epsilon(1e-14));
    CHECK(th.rate == Catch::Approx(1.0 + 0.5 * ss).epsilon(1e-12));

    // pair block: exact truncated-normal kappa draw inside current psi
    const auto& pair = std::get<McmcBlock>(spec.blocks[1]);
    auto inner = pair.conditionals(m);
    REQUIRE(inner.size() == 2);
    std::vector<double> state = {0.8, 0.0};  // psi, kappa
    const auto& kd = std::get<TruncatedNormal>(std::get<GibbsRule>(inner[1]).conditional(state));
    CHECK(kd.mean == Catch::Approx((-0.5 - 0.5) * 2.0 / 2.1).epsilon(1e-14));
    CHECK(kd.var == Catch::Approx(1.0 / 2.1).epsilon(1e-14));
    CHECK(kd.lower == -0.8);
    CHECK(kd.upper == 0.8);

    const auto& pr = std::get<MhRule>(inner[0]);
    state[1] = 0.45;
    double expect = -(0.9 - 0.05) * (0.9 - 0.05) / 20.0 - std::log(std::erf(0.9 / std::sqrt(20.0)));
    CHECK(pr.log_conditional(0.9, state) == Catch::Approx(expect).epsilon(1e-12));
    CHECK(pr.log_conditional(0.4, state) == -kInf);
}

TEST_CASE("model2 engines agree on the location at desk scale") {
    model2::Data d = small_data();
    int n = d.n();

    auto rules = model2::mcmc_rules(d);
    ChainState chain = model2::mcmc_init(d);
    RngHandle mr(31);
    oracle::RunningMoments vt_mcmc, th_mcmc;
    std::vector<oracle::RunningMoments> kap_mcmc(n);
    for (int sweep = 0; sweep < 4000; ++sweep) {
        mwg_sweep(chain, rules, mr, nullptr);
        if (sweep >= 2000) {
            vt_mcmc.add(chain.values[model2::idx_vartheta()]);
            th_mcmc.add(chain.values[model2::idx_theta(n)]);
            for (int j = 0; j < n; ++j) kap_mcmc[j].add(chain.values[model2::idx_kappa(j)]);
        }
    }

    // small inner sample while the iterates travel, a large one for the
    // final sweeps so the published moments carry little simulation noise
    ModelSpec spec = model2::mc_spec(d);
    McCaviOptions opt{McSchedule(10, 150, 2000)};
    opt.sweeps = 170;
    RngHandle cr(77);
    McCaviResult res = run_mc_cavi(spec, opt, cr);
    TraceSummary sum = summarize_trace(res.trace, 100);

    CHECK(std::abs(sum.mean[0] - vt_mcmc.mean()) < 0.25);
    // the variational tail is much tighter than the posterior spread
    CHECK(sum.sd[0] < std::sqrt(vt_mcmc.var()));

    double max_gap = 0.0;
    for (int j = 0; j < n; ++j)
        max_gap = std::max(max_gap,
                           std::abs(res.state.moments.at(model2::kappa_key(j)) - kap_mcmc[j].mean()));
    CHECK(max_gap < 0.4);
}

TEST_CASE("model2 bbvi scores match central differences in every coordinate") {
    model2::Data d = model2::Data::from_values({1.0, -0.5, 2.0, 0.3, 1.7});
    std::vector<FactorFamily> fams = {model2::bbvi_vartheta_factor(d),
                                      model2::bbvi_theta_factor(d),
                                      model2::bbvi_pair_factor(d, 2)};
    RngHandle rng(41);
    for (const auto& f : fams) {
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<double> lam(f.dim);
            for (int k = 0; k < f.dim; ++k)
                lam[k] = (k % 2 == 0) ? rng.uniform(-1.0, 1.0) : rng.uniform(-0.7, 0.3);
            auto z = f.sample(lam.data(), rng);
            std::vector<double> sc(f.dim);
            f.score(lam.data(), z, sc.data());
            for (int k = 0; k < f.dim; ++k) {
                double h = 1e-4;
                std::vector<double> lp = lam, lm = lam;
                lp[k] += h;
                lm[k] -= h;
                double num = (f.log_q(lp.data(), z) - f.log_q(lm.data(), z)) / (2 * h);
                CHECK(std::abs(sc[k] - num) <= 1e-6 * std::max(1.0, std::abs(num)));
            }
        }
    }
}

TEST_CASE("model2 bbvi pair moments match a grid double integral") {
    model2::Data d = model2::Data::from_values({1.0, -0.5, 2.0});
    FactorFamily f = model2::bbvi_pair_factor(d, 0);
    std::vector<double> lam = {0.3, -0.2, 0.6, -0.5};
    Moments m;
    f.publish(lam.data(), m);

    double sig_k = std::exp(lam[1]), sig_p = std::exp(lam[3]);
    auto phi_k = [&](double x) {
        double u = (x - lam[0]) / sig_k;
        return std::exp(-0.5 * u * u);
    };
    auto phi_p = [&](double x) {
        double u = (x - lam[2]) / sig_p;
        return std::exp(-0.5 * u * u);
    };
    int np = 800, nk = 400;
    double mass = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i <= np; ++i) {
        double psi = 2.0 * i / np;
        double wp = (i == 0 || i == np) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        double w = wp * phi_p(psi);
        mass += w;
        if (i == 0) continue;  // conditional moments vanish as the interval shrinks
        double z0 = oracle::simpson(phi_k, -psi, psi, nk);
        double z1 = oracle::simpson([&](double x) { return x * phi_k(x); }, -psi, psi, nk);
        double z2 = oracle::simpson([&](double x) { return x * x * phi_k(x); }, -psi, psi, nk);
        m1 += w * z1 / z0;
        m2 += w * z2 / z0;
    }
    CHECK(m.at("E_kappa_0") == Catch::Approx(m1 / mass).epsilon(1e-6));
    CHECK(m.at("E_kappa2_0") == Catch::Approx(m2 / mass).epsilon(1e-6));
}

TEST_CASE("model2 bbvi improves the location from its offset start") {
    model2::Data d = small_data();
    BbviModel model = model2::bbvi_model(d);
    REQUIRE(model.total_dim() == 4 + 4 * d.n());

    BbviOptions opt;
    opt.iters = 60;
    opt.n_samples = 10;
    RngHandle rng(19);
    BbviResult res = run_bbvi(model, opt, rng);
    CHECK(res.trace.rows.size() == 60);
    CHECK(std::abs(res.moments.at("E_vartheta") - 6.0) < 1.2);
}

TEST_CASE("model2 control variates cut gradient variance at the start point") {
    model2::Data d = small_data();
    BbviModel model = model2::bbvi_model(d);
    Moments m;
    model.publish_all(model.init_lambda, m);

    int reps = 12, n = 50;
    int better = 0, total = 0;
    RngHandle rng(53);
    int off = 0;
    for (std::size_t fi = 0; fi < 3; ++fi) {  // vartheta, theta, first pair
        const auto& fac = model.factors[fi];
        std::vector<std::vector<double>> plains(fac.dim), cvs(fac.dim);
        for (int r = 0; r < reps; ++r) {
            GradientEstimate est = rb_gradient(fac, model.init_lambda.data() + off, m, n, rng);
            for (int k = 0; k < fac.dim; ++k) {
                plains[k].push_back(est.plain[k]);
                cvs[k].push_back(est.cv[k]);
            }
        }
        auto var_of = [](const std::vector<double>& v) {
            double mu = 0, s = 0;
            for (double x : v) mu += x;
            mu /= v.size();
            for (double x : v) s += (x - mu) * (x - mu);
            return s / (v.size() - 1);
        };
        for (int k = 0; k < fac.dim; ++k) {
            ++total;
            if (var_of(cvs[k]) <= var_of(plains[k])) ++better;
        }
        off += fac.dim;
    }
    CHECK(total == 8);
    CHECK(better >= 6);
}
