#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcvi/bbvi.hpp"
#include "mcvi/io.hpp"
#include "mcvi/mc_cavi.hpp"
#include "mcvi/mcmc.hpp"
#include "mcvi/models/model1.hpp"
#include "mcvi/models/model2.hpp"
#include "mcvi/models/nmr.hpp"
#include "mcvi/svg.hpp"
#include "mcvi/trace.hpp"
#include "mcvi/vi.hpp"

namespace mcvi::harness {

inline constexpr std::uint64_t kModel1DataSeed = 50;
inline constexpr std::uint64_t kModel2DataSeed = 21;
inline constexpr std::uint64_t kNmrFixtureSeed = 424242;

enum class Experiment { Example1, Example2, Nmr, Theorem1Sweep, ScheduleSweep };

inline Experiment parse_experiment(const std::string& s) {
    if (s == "example1") return Experiment::Example1;
    if (s == "example2") return Experiment::Example2;
    if (s == "nmr") return Experiment::Nmr;
    if (s == "theorem1-sweep") return Experiment::Theorem1Sweep;
    if (s == "schedule-sweep") return Experiment::ScheduleSweep;
    throw std::invalid_argument("unknown experiment: " + s);
}

inline std::string experiment_name(Experiment e) {
    switch (e) {
        case Experiment::Example1: return "example1";
        case Experiment::Example2: return "example2";
        case Experiment::Nmr: return "nmr";
        case Experiment::Theorem1Sweep: return "theorem1-sweep";
        case Experiment::ScheduleSweep: return "schedule-sweep";
    }
    return "?";
}

struct ExperimentConfig {
    Experiment experiment = Experiment::Example1;
    std::string engine = "all";
    std::uint64_t seed = 1;
    bool schedule_set = false;
    McSchedule schedule{10, 10, 1000};
    int iters = -1;            // <0 means engine default
    double budget_secs = -1.0; // <0 means no budget
    std::string out_dir = "out";
    std::string spectrum_path, catalog_path;
    io::ConfigFile file;

    void validate() const {
        if (iters >= 0 && budget_secs >= 0.0)
            throw std::invalid_argument("set --iters or --budget-secs, not both");
    }
};

struct EngineReport {
    std::string engine;
    std::string trace_file;
    SweepTrace trace;
    int burn = 0;
    bool failed = false;
    bool diverged = false;
    std::string failure;
    TraceSummary summary;
};

struct ReportBundle {
    Experiment experiment = Experiment::Example1;
    std::vector<EngineReport> reports;
    std::vector<std::pair<std::string, std::string>> manifest;
    std::vector<std::string> files;

    bool any_failed() const {
        for (const auto& r : reports)
            if (r.failed) return true;
        return false;
    }
    bool any_diverged() const {
        for (const auto& r : reports)
            if (r.diverged) return true;
        return false;
    }
    const EngineReport* find(const std::string& engine) const {
        for (const auto& r : reports)
            if (r.engine == engine) return &r;
        return nullptr;
    }
};

inline std::vector<std::string> engines_for(Experiment e) {
    switch (e) {
        case Experiment::Example1: return {"cavi", "mc-cavi"};
        case Experiment::Example2: return {"mcmc", "mc-cavi", "bbvi"};
        case Experiment::Nmr: return {"mc-cavi", "mcmc"};
        case Experiment::Theorem1Sweep: return {"mc-cavi"};
        case Experiment::ScheduleSweep: return {"mc-cavi"};
    }
    return {};
}

inline std::vector<std::string> resolve_engines(const ExperimentConfig& cfg) {
    std::vector<std::string> avail = engines_for(cfg.experiment);
    if (cfg.engine == "all") return avail;
    if (std::find(avail.begin(), avail.end(), cfg.engine) == avail.end())
        throw std::invalid_argument("engine '" + cfg.engine + "' not available for experiment " +
                                    experiment_name(cfg.experiment));
    return {cfg.engine};
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::function<bool(int)> budget_stopper(Clock::time_point start, double budget_secs) {
    if (budget_secs < 0.0) return nullptr;
    return [start, budget_secs](int) {
        return std::chrono::duration<double>(Clock::now() - start).count() >= budget_secs;
    };
}

inline int clamp_burn(int burn, std::size_t rows) {
    if (rows == 0) return 0;
    return std::clamp(burn, 0, static_cast<int>(rows) - 1);
}

inline void finish_report(EngineReport& r, int burn) {
    if (r.trace.rows.empty()) {
        r.failed = true;
        if (r.failure.empty()) r.failure = "empty trace";
        return;
    }
    r.burn = clamp_burn(burn, r.trace.rows.size());
    r.summary = summarize_trace(r.trace, r.burn);
}

inline std::uint64_t engine_seed(const ExperimentConfig& cfg, int idx) {
    return cfg.seed * 1000003ull + 17ull * static_cast<std::uint64_t>(idx) + 1ull;
}

inline double quantile_sorted(std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    double pos = q * (static_cast<double>(v.size()) - 1.0);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    double w = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[lo + 1] * w;
}

}  // namespace detail

// pointwise mean curve plus the 2.5%-97.5% band over the supplied fitted
// curves, drawn over the data
inline void emit_fit_plot(const std::string& path, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::vector<double>& x, const std::vector<double>& data,
                          const std::vector<std::vector<double>>& curves) {
    if (curves.empty()) throw std::invalid_argument("emit_fit_plot: no fitted curves");
    std::size_t n = x.size();
    std::vector<double> mean(n, 0.0), lo(n), hi(n), col(curves.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < curves.size(); ++k) {
            mean[i] += curves[k][i];
            col[k] = curves[k][i];
        }
        mean[i] /= static_cast<double>(curves.size());
        std::vector<double> tmp = col;
        lo[i] = detail::quantile_sorted(tmp, 0.025);
        tmp = col;
        hi[i] = detail::quantile_sorted(tmp, 0.975);
    }
    svg::Chart chart;
    chart.title = title;
    chart.xlabel = xlabel;
    chart.ylabel = ylabel;
    chart.bands.push_back({"95% band", x, lo, hi});
    chart.series.push_back({"data", x, data, "#444444", 1.0});
    chart.series.push_back({"posterior mean", x, mean, "#1f77b4", 1.8});
    svg::write_chart_file(path, chart);
}

inline void emit_trace_plot(const std::string& path, const std::string& title,
                            const SweepTrace& trace, std::size_t column) {
    svg::Chart chart;
    chart.title = title;
    chart.xlabel = "sweep";
    chart.ylabel = column < trace.columns.size() ? trace.columns[column] : "value";
    svg::Series s;
    s.label = chart.ylabel;
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        s.x.push_back(static_cast<double>(i + 1));
        s.y.push_back(trace.rows[i][column]);
    }
    chart.series.push_back(std::move(s));
    svg::write_chart_file(path, chart);
}

// --------------------------------------------------------------------------
// experiment runners

namespace detail {

inline void run_example1(const ExperimentConfig& cfg, ReportBundle& bundle) {
    RngHandle data_rng(kModel1DataSeed);
    model1::Data d = model1::generate(1000, 10.0, 100.0, data_rng);
    auto start = Clock::now();

    int idx = 0;
    for (const std::string& eng : resolve_engines(cfg)) {
        EngineReport r;
        r.engine = eng;
        if (cfg.iters == 0) {
            r.failed = true;
            r.failure = "zero iterations requested";
            bundle.reports.push_back(std::move(r));
            continue;
        }
        try {
            if (eng == "cavi") {
                double tol = cfg.file.get_double("cavi", "rel_tol", 1e-4);
                int cap = cfg.iters > 0 ? cfg.iters : cfg.file.get_int("cavi", "max_sweeps", 100);
                CaviResult res = run_cavi(model1::cavi_spec(d), tol, cap);
                r.trace = std::move(res.trace);
            } else {
                McCaviOptions opt;
                opt.schedule = cfg.schedule_set
                                   ? cfg.schedule
                                   : cfg.file.get_schedule("mc-cavi", "schedule",
                                                           McSchedule(10, 10, 1000));
                opt.sweeps = cfg.iters > 0 ? cfg.iters : cfg.file.get_int("mc-cavi", "sweeps", 100);
                opt.should_stop = budget_stopper(start, cfg.budget_secs);
                RngHandle rng(engine_seed(cfg, idx));
                McCaviResult res = run_mc_cavi(model1::mc_spec(d), opt, rng);
                r.trace = std::move(res.trace);
            }
        } catch (const NonConvergence& e) {
            r.failed = true;
            r.failure = e.what();
            r.trace = e.trace;
        }
        // the point estimate is the trailing-10 sweep average
        finish_report(r, static_cast<int>(r.trace.rows.size()) - 10);
        bundle.reports.push_back(std::move(r));
        ++idx;
    }
    bundle.manifest.emplace_back("data_seed", std::to_string(kModel1DataSeed));
}

inline SweepTrace run_model2_mcmc(const model2::Data& d, int iters, RngHandle& rng,
                                  const std::function<bool(int)>& should_stop) {
    int n = d.n();
    auto rules = model2::mcmc_rules(d);
    ChainState chain = model2::mcmc_init(d);
    ConstraintCheck constraint = model2::mcmc_constraint(d);
    SweepTrace trace;
    trace.columns.push_back("vartheta");
    trace.columns.push_back("theta");
    for (int j = 0; j < n; ++j) trace.columns.push_back(model2::kappa_key(j));
    auto t0 = Clock::now();
    for (int it = 0; it < iters; ++it) {
        mwg_sweep(chain, rules, rng, constraint);
        std::vector<double> row;
        row.reserve(2 + n);
        row.push_back(chain.values[model2::idx_vartheta()]);
        row.push_back(chain.values[model2::idx_theta(n)]);
        for (int j = 0; j < n; ++j) row.push_back(chain.values[model2::idx_kappa(j)]);
        trace.append(std::move(row), std::chrono::duration<double>(Clock::now() - t0).count());
        if (should_stop && should_stop(it + 1)) break;
    }
    return trace;
}

inline void run_example2(const ExperimentConfig& cfg, ReportBundle& bundle) {
    RngHandle data_rng(kModel2DataSeed);
    model2::Data d = model2::generate(100, 6.0, 3.0, data_rng);
    auto start = Clock::now();

    int idx = 0;
    for (const std::string& eng : resolve_engines(cfg)) {
        EngineReport r;
        r.engine = eng;
        if (cfg.iters == 0) {
            r.failed = true;
            r.failure = "zero iterations requested";
            bundle.reports.push_back(std::move(r));
            continue;
        }
        RngHandle rng(engine_seed(cfg, idx));
        int burn = 0;
        try {
            if (eng == "mcmc") {
                int iters = cfg.iters > 0 ? cfg.iters : cfg.file.get_int("mcmc", "iters", 2500);
                burn = cfg.file.get_int("mcmc", "burn", iters / 2);
                r.trace = run_model2_mcmc(d, iters, rng, budget_stopper(start, cfg.budget_secs));
            } else if (eng == "mc-cavi") {
                McCaviOptions opt;
                opt.schedule = cfg.schedule_set
                                   ? cfg.schedule
                                   : cfg.file.get_schedule("mc-cavi", "schedule",
                                                           McSchedule(10, 150, 10));
                opt.sweeps = cfg.iters > 0 ? cfg.iters : cfg.file.get_int("mc-cavi", "sweeps", 300);
                opt.should_stop = budget_stopper(start, cfg.budget_secs);
                burn = cfg.file.get_int("mc-cavi", "burn", opt.sweeps / 2);
                McCaviResult res = run_mc_cavi(model2::mc_spec(d), opt, rng);
                r.trace = std::move(res.trace);
            } else {
                BbviOptions opt;
                opt.iters = cfg.iters > 0 ? cfg.iters : cfg.file.get_int("bbvi", "iters", 100);
                opt.n_samples = cfg.file.get_int("bbvi", "n_samples", 10);
                opt.eta = cfg.file.get_double("bbvi", "eta", 0.5);
                opt.should_stop = budget_stopper(start, cfg.budget_secs);
                burn = cfg.file.get_int("bbvi", "burn", opt.iters / 2);
                BbviResult res = run_bbvi(model2::bbvi_model(d), opt, rng);
                r.trace = std::move(res.trace);
            }
        } catch (const BbviDivergence& e) {
            r.failed = true;
            r.diverged = true;
            r.failure = e.what();
            r.trace = e.trace;
        }
        finish_report(r, burn);
        bundle.reports.push_back(std::move(r));
        ++idx;
    }
    bundle.manifest.emplace_back("data_seed", std::to_string(kModel2DataSeed));
}

inline void run_nmr(const ExperimentConfig& cfg, ReportBundle& bundle) {
    nmr::Spectrum spec;
    nmr::Catalog cat;
    if (!cfg.spectrum_path.empty() || !cfg.catalog_path.empty()) {
        if (cfg.spectrum_path.empty() || cfg.catalog_path.empty())
            throw std::invalid_argument("nmr needs both --spectrum and --catalog, or neither");
        spec = io::load_spectrum_file(cfg.spectrum_path);
        cat = io::load_catalog_file(cfg.catalog_path);
    } else {
        nmr::Fixture f = nmr::make_fixture(kNmrFixtureSeed);
        spec = std::move(f.spec);
        cat = std::move(f.catalog);
    }
    nmr::Config ncfg;
    ncfg.levels = cfg.file.get_int("nmr", "levels", ncfg.levels);
    ncfg.theta_shape_prior_form =
        cfg.file.get_bool("nmr", "theta_shape_prior_form", ncfg.theta_shape_prior_form);
    auto start = Clock::now();
    auto stopper = budget_stopper(start, cfg.budget_secs);

    int idx = 0;
    for (const std::string& eng : resolve_engines(cfg)) {
        EngineReport r;
        r.engine = eng;
        if (cfg.iters == 0) {
            r.failed = true;
            r.failure = "zero iterations requested";
            bundle.reports.push_back(std::move(r));
            continue;
        }
        int burn = 0;
        if (eng == "mc-cavi") {
            McSchedule sched = cfg.schedule_set
                                   ? cfg.schedule
                                   : cfg.file.get_schedule("mc-cavi", "schedule",
                                                           McSchedule(10, 0, 10));
            int sweeps = cfg.iters > 0 ? cfg.iters : cfg.file.get_int("mc-cavi", "sweeps", 500);
            burn = cfg.file.get_int("mc-cavi", "burn", sweeps / 2);
            nmr::McCaviEngine engine(spec, cat, ncfg, engine_seed(cfg, idx));
            for (int s = 1; s <= sweeps; ++s) {
                engine.sweep(sched.n_at(s));
                if (stopper && stopper(s)) break;
            }
            r.trace = std::move(engine.trace);
        } else {
            int iters = cfg.iters > 0 ? cfg.iters : cfg.file.get_int("mcmc", "iters", 2000);
            burn = cfg.file.get_int("mcmc", "burn", iters / 2);
            nmr::McmcEngine engine(spec, cat, ncfg, engine_seed(cfg, idx));
            for (int s = 0; s < iters; ++s) {
                engine.iterate();
                if (stopper && stopper(s + 1)) break;
            }
            r.trace = std::move(engine.trace);
        }
        finish_report(r, burn);
        bundle.reports.push_back(std::move(r));
        ++idx;
    }
    bundle.manifest.emplace_back("fixture_seed", std::to_string(kNmrFixtureSeed));
}

inline void run_theorem1(const ExperimentConfig& cfg, ReportBundle& bundle) {
    RngHandle data_rng(kModel1DataSeed);
    model1::Data d = model1::generate(1000, 10.0, 100.0, data_rng);

    CaviResult fixed = run_cavi(model1::cavi_spec(d));
    double e_star = fixed.trace.rows.back()[2];

    int sweeps = cfg.iters > 0 ? cfg.iters : 50;
    const int n_seeds = 20;
    EngineReport r;
    r.engine = "mc-cavi";
    r.trace.columns = {"N", "median_abs_err"};
    if (cfg.iters == 0) {
        r.failed = true;
        r.failure = "zero iterations requested";
        bundle.reports.push_back(std::move(r));
        return;
    }
    for (int N : {10, 100, 1000}) {
        std::vector<double> errs;
        for (int s = 0; s < n_seeds; ++s) {
            McCaviOptions opt;
            opt.schedule = McSchedule(N, 0, N);
            opt.sweeps = sweeps;
            RngHandle rng(cfg.seed + static_cast<std::uint64_t>(s));
            McCaviResult res = run_mc_cavi(model1::mc_spec(d), opt, rng);
            errs.push_back(std::abs(res.trace.rows.back()[2] - e_star));
        }
        r.trace.append({static_cast<double>(N), detail::quantile_sorted(errs, 0.5)});
    }
    finish_report(r, 0);
    bundle.reports.push_back(std::move(r));
    bundle.manifest.emplace_back("cavi_e_tau", io::format_double(e_star));
    bundle.manifest.emplace_back("data_seed", std::to_string(kModel1DataSeed));
}

inline void run_schedule_sweep(const ExperimentConfig& cfg, ReportBundle& bundle) {
    RngHandle data_rng(kModel1DataSeed);
    model1::Data d = model1::generate(1000, 10.0, 100.0, data_rng);

    const std::vector<McSchedule> schedules = {
        McSchedule(10, 10, 100000), McSchedule(1000, 10, 100000), McSchedule(100000, 10, 100000),
        McSchedule(10, 30, 100000), McSchedule(10, 50, 100000)};

    EngineReport r;
    r.engine = "mc-cavi";
    r.trace.columns = {"A", "B", "C", "e_tau_hat"};
    if (cfg.iters == 0) {
        r.failed = true;
        r.failure = "zero iterations requested";
        bundle.reports.push_back(std::move(r));
        return;
    }
    int idx = 0;
    for (const McSchedule& sched : schedules) {
        McCaviOptions opt;
        opt.schedule = sched;
        opt.sweeps = cfg.iters > 0 ? cfg.iters : sched.switch_after + 10;
        RngHandle rng(engine_seed(cfg, idx++));
        McCaviResult res = run_mc_cavi(model1::mc_spec(d), opt, rng);
        TraceSummary sum =
            summarize_trace(res.trace, static_cast<int>(res.trace.rows.size()) - 10);
        r.trace.append({static_cast<double>(sched.first_n),
                        static_cast<double>(sched.switch_after),
                        static_cast<double>(sched.later_n), sum.mean[2]});
    }
    finish_report(r, 0);
    bundle.reports.push_back(std::move(r));
    bundle.manifest.emplace_back("data_seed", std::to_string(kModel1DataSeed));
}

// fitted signal curves on the real grid from post-burn nmr trace rows
inline std::vector<std::vector<double>> nmr_fitted_curves(const nmr::Problem& P,
                                                          const SweepTrace& trace, int burn,
                                                          std::size_t max_curves = 160) {
    std::vector<std::vector<double>> curves;
    std::size_t rows = trace.rows.size();
    if (rows == 0) return curves;
    std::size_t first = static_cast<std::size_t>(burn);
    std::size_t count = rows - first;
    std::size_t stride = std::max<std::size_t>(1, count / max_curves);
    for (std::size_t i = first; i < rows; i += stride) {
        const auto& row = trace.rows[i];
        std::vector<double> curve(P.n_real, 0.0);
        double gamma = row[P.n_mets];
        const double* delta = row.data() + P.n_mets + 2;  // skip gamma, theta
        for (int m = 0; m < P.n_mets; ++m) {
            auto col = P.column(m, gamma, delta);
            for (int i2 = 0; i2 < P.n_real; ++i2) curve[i2] += row[m] * col[i2];
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

}  // namespace detail

// --------------------------------------------------------------------------
// bundle writing

inline void write_bundle(const ExperimentConfig& cfg, ReportBundle& bundle) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::string prefix = experiment_name(bundle.experiment);

    for (auto& r : bundle.reports) {
        r.trace_file = prefix + "_" + r.engine + "_trace.csv";
        std::string path = (fs::path(cfg.out_dir) / r.trace_file).string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write trace file: " + path);
        out << r.trace.to_csv();
        bundle.files.push_back(path);
    }

    std::string summary_path = (fs::path(cfg.out_dir) / "summary.csv").string();
    {
        std::ofstream out(summary_path);
        if (!out) throw std::runtime_error("cannot write summary file: " + summary_path);
        out << "engine,parameter,mean,sd\n";
        for (const auto& r : bundle.reports) {
            if (r.failed) continue;
            for (std::size_t c = 0; c < r.trace.columns.size(); ++c)
                out << r.engine << ',' << r.trace.columns[c] << ','
                    << io::format_double(r.summary.mean[c]) << ','
                    << io::format_double(r.summary.sd[c]) << '\n';
        }
    }
    bundle.files.push_back(summary_path);

    for (const auto& r : bundle.reports) {
        if (r.trace.rows.empty()) continue;
        std::string plot = (fs::path(cfg.out_dir) / (prefix + "_" + r.engine + "_trace.svg")).string();
        emit_trace_plot(plot, prefix + " " + r.engine, r.trace, 0);
        bundle.files.push_back(plot);
    }

    if (bundle.experiment == Experiment::Example2) {
        const EngineReport* src = bundle.find("mcmc");
        if (src && !src->failed && src->trace.columns.size() >= 2) {
            RngHandle data_rng(kModel2DataSeed);
            model2::Data d = model2::generate(100, 6.0, 3.0, data_rng);
            int n = d.n();
            std::vector<double> x(n), data(n);
            for (int j = 0; j < n; ++j) {
                x[j] = static_cast<double>(j + 1);
                data[j] = d.y[j];
            }
            std::vector<std::vector<double>> curves;
            std::size_t stride =
                std::max<std::size_t>(1, (src->trace.rows.size() - src->burn) / 200);
            for (std::size_t i = static_cast<std::size_t>(src->burn); i < src->trace.rows.size();
                 i += stride) {
                const auto& row = src->trace.rows[i];
                std::vector<double> curve(n);
                for (int j = 0; j < n; ++j) curve[j] = row[0] + row[2 + j];
                curves.push_back(std::move(curve));
            }
            std::string plot = (fs::path(cfg.out_dir) / "example2_fit.svg").string();
            emit_fit_plot(plot, "example2 posterior fit", "j", "y", x, data, curves);
            bundle.files.push_back(plot);
        }
    }

    if (bundle.experiment == Experiment::Nmr) {
        nmr::Spectrum spec;
        nmr::Catalog cat;
        if (!cfg.spectrum_path.empty()) {
            spec = io::load_spectrum_file(cfg.spectrum_path);
            cat = io::load_catalog_file(cfg.catalog_path);
        } else {
            nmr::Fixture f = nmr::make_fixture(kNmrFixtureSeed);
            spec = std::move(f.spec);
            cat = std::move(f.catalog);
        }
        nmr::Config ncfg;
        ncfg.levels = cfg.file.get_int("nmr", "levels", ncfg.levels);
        nmr::Problem P(spec, cat, ncfg);
        for (const auto& r : bundle.reports) {
            if (r.failed) continue;
            auto curves = detail::nmr_fitted_curves(P, r.trace, r.burn);
            if (curves.empty()) continue;
            std::vector<double> x(spec.ppm.begin(), spec.ppm.begin() + P.n_real);
            std::vector<double> data(spec.y.begin(), spec.y.begin() + P.n_real);
            std::string plot =
                (fs::path(cfg.out_dir) / ("nmr_" + r.engine + "_fit.svg")).string();
            emit_fit_plot(plot, "nmr " + r.engine + " fit", "ppm", "intensity", x, data, curves);
            bundle.files.push_back(plot);
        }
    }

    std::vector<std::pair<std::string, std::string>> man;
    man.emplace_back("experiment", prefix);
    man.emplace_back("seed", std::to_string(cfg.seed));
    man.emplace_back("engine", cfg.engine);
    if (cfg.schedule_set)
        man.emplace_back("schedule", std::to_string(cfg.schedule.first_n) + "," +
                                         std::to_string(cfg.schedule.switch_after) + "," +
                                         std::to_string(cfg.schedule.later_n));
    if (cfg.iters >= 0) man.emplace_back("iters", std::to_string(cfg.iters));
    if (cfg.budget_secs >= 0.0) man.emplace_back("budget_secs", io::format_double(cfg.budget_secs));
    if (!cfg.spectrum_path.empty()) man.emplace_back("spectrum", cfg.spectrum_path);
    if (!cfg.catalog_path.empty()) man.emplace_back("catalog", cfg.catalog_path);
    for (const auto& kv : bundle.manifest) man.push_back(kv);
    for (const auto& r : bundle.reports) {
        man.emplace_back("trace." + r.engine, r.trace_file);
        man.emplace_back("burn." + r.engine, std::to_string(r.burn));
        man.emplace_back("failed." + r.engine, r.failed ? "true" : "false");
        if (!r.failure.empty()) man.emplace_back("failure." + r.engine, r.failure);
    }
    bundle.manifest = man;

    std::string man_path = (fs::path(cfg.out_dir) / "manifest.txt").string();
    std::ofstream out(man_path);
    if (!out) throw std::runtime_error("cannot write manifest: " + man_path);
    io::write_manifest(out, bundle.manifest);
    bundle.files.push_back(man_path);
}

inline ReportBundle run_experiment(const ExperimentConfig& cfg, bool write_files = true) {
    cfg.validate();
    ReportBundle bundle;
    bundle.experiment = cfg.experiment;
    switch (cfg.experiment) {
        case Experiment::Example1: detail::run_example1(cfg, bundle); break;
        case Experiment::Example2: detail::run_example2(cfg, bundle); break;
        case Experiment::Nmr: detail::run_nmr(cfg, bundle); break;
        case Experiment::Theorem1Sweep: detail::run_theorem1(cfg, bundle); break;
        case Experiment::ScheduleSweep: detail::run_schedule_sweep(cfg, bundle); break;
    }
    if (write_files) write_bundle(cfg, bundle);
    return bundle;
}

// re-render summary and plots from the trace CSVs in an existing output dir
inline ReportBundle report_from_dir(const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::string man_path = (fs::path(out_dir) / "manifest.txt").string();
    std::ifstream in(man_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + man_path);
    auto man = io::read_manifest(in);
    if (!man.count("experiment")) throw std::runtime_error("manifest missing experiment id");

    ExperimentConfig cfg;
    cfg.experiment = parse_experiment(man.at("experiment"));
    cfg.out_dir = out_dir;
    if (man.count("seed")) cfg.seed = std::stoull(man.at("seed"));
    if (man.count("engine")) cfg.engine = man.at("engine");
    if (man.count("spectrum")) cfg.spectrum_path = man.at("spectrum");
    if (man.count("catalog")) cfg.catalog_path = man.at("catalog");

    ReportBundle bundle;
    bundle.experiment = cfg.experiment;
    for (const auto& [key, val] : man) {
        if (key.rfind("trace.", 0) != 0) continue;
        std::string engine = key.substr(6);
        EngineReport r;
        r.engine = engine;
        r.trace_file = val;
        std::string path = (fs::path(out_dir) / val).string();
        std::ifstream tin(path);
        if (!tin) throw std::runtime_error("cannot open trace: " + path);
        r.trace = SweepTrace::from_csv(tin);
        if (man.count("failed." + engine) && man.at("failed." + engine) == "true") {
            r.failed = true;
            if (man.count("failure." + engine)) r.failure = man.at("failure." + engine);
        }
        int burn = man.count("burn." + engine) ? std::stoi(man.at("burn." + engine)) : 0;
        if (!r.failed) detail::finish_report(r, burn);
        bundle.reports.push_back(std::move(r));
    }
    // keep the experiment-level manifest entries (data seeds etc.); the keys
    // write_bundle re-emits from the config are skipped to avoid duplicates
    for (const auto& [key, val] : man)
        if (key.find('.') == std::string::npos && key != "experiment" && key != "seed" &&
            key != "engine" && key != "spectrum" && key != "catalog")
            bundle.manifest.emplace_back(key, val);
    write_bundle(cfg, bundle);
    return bundle;
}

// --------------------------------------------------------------------------
// fixture generation

inline std::vector<std::string> gen_fixtures(const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> files;

    {
        RngHandle rng(kModel1DataSeed);
        model1::Data d = model1::generate(1000, 10.0, 100.0, rng);
        std::string path = (fs::path(out_dir) / "model1_sample.csv").string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << "x\n";
        for (double v : d.x) out << io::format_double(v) << '\n';
        files.push_back(path);
    }
    {
        RngHandle rng(kModel2DataSeed);
        model2::Data d = model2::generate(100, 6.0, 3.0, rng);
        std::string path = (fs::path(out_dir) / "model2_sample.csv").string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << "y\n";
        for (double v : d.y) out << io::format_double(v) << '\n';
        files.push_back(path);
    }
    {
        nmr::Fixture f = nmr::make_fixture(kNmrFixtureSeed);
        std::string spath = (fs::path(out_dir) / "nmr_spectrum.txt").string();
        io::save_spectrum_file(spath, f.spec);
        files.push_back(spath);
        std::string cpath = (fs::path(out_dir) / "nmr_catalog.txt").string();
        io::save_catalog_file(cpath, f.catalog);
        files.push_back(cpath);
    }
    return files;
}

}  // namespace mcvi::harness
