#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcvi/harness.hpp"

namespace {

void print_bundle(const mcvi::harness::ReportBundle& bundle) {
    for (const auto& r : bundle.reports) {
        if (r.failed)
            std::fprintf(stderr, "engine %s: FAILED (%s)\n", r.engine.c_str(),
                         r.failure.c_str());
        else
            std::printf("engine %s: %zu sweeps, burn %d\n", r.engine.c_str(),
                        r.trace.rows.size(), r.burn);
    }
    for (const auto& f : bundle.files) std::printf("wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"benchmark harness for variational and MCMC inference engines"};
    app.require_subcommand(1);

    std::string experiment, engine = "all", out_dir = "out";
    std::string config_path, spectrum_path, catalog_path;
    std::uint64_t seed = 1;
    int iters = -1;
    double budget_secs = -1.0;
    std::vector<int> schedule;

    CLI::App* run = app.add_subcommand("run", "run an experiment and write a report bundle");
    run->add_option("--experiment", experiment,
                    "example1|example2|nmr|theorem1-sweep|schedule-sweep")
        ->required();
    run->add_option("--engine", engine, "engine name, or 'all'");
    run->add_option("--seed", seed, "rng seed");
    CLI::Option* iters_opt = run->add_option("--iters", iters, "outer iteration count");
    run->add_option("--budget-secs", budget_secs, "wall-clock budget in seconds")
        ->excludes(iters_opt);
    run->add_option("--schedule", schedule, "inner sample schedule A,B,C")->delimiter(',');
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--config", config_path, "key = value config file");
    run->add_option("--spectrum", spectrum_path, "nmr spectrum file (2-column text)");
    run->add_option("--catalog", catalog_path, "nmr multiplet catalog file");

    std::string fixtures_dir = "fixtures";
    CLI::App* gen = app.add_subcommand("gen-fixtures", "write the synthetic datasets");
    gen->add_option("--out", fixtures_dir, "output directory");

    std::string report_dir;
    CLI::App* rep =
        app.add_subcommand("report", "re-render summary and plots from an existing bundle");
    rep->add_option("--out", report_dir, "bundle directory to re-render")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    mcvi::harness::ExperimentConfig cfg;
    if (run->parsed()) {
        try {
            cfg.experiment = mcvi::harness::parse_experiment(experiment);
            cfg.engine = engine;
            cfg.seed = seed;
            cfg.iters = iters;
            cfg.budget_secs = budget_secs;
            cfg.out_dir = out_dir;
            cfg.spectrum_path = spectrum_path;
            cfg.catalog_path = catalog_path;
            if (!schedule.empty()) {
                if (schedule.size() != 3)
                    throw std::invalid_argument("--schedule expects three values A,B,C");
                cfg.schedule = mcvi::McSchedule(schedule[0], schedule[1], schedule[2]);
                cfg.schedule_set = true;
            }
            if (!config_path.empty())
                cfg.file = mcvi::io::ConfigFile::parse_file(config_path);
            cfg.validate();
        } catch (const std::exception& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 1;
        }
    }

    try {
        if (run->parsed()) {
            mcvi::harness::ReportBundle bundle = mcvi::harness::run_experiment(cfg);
            print_bundle(bundle);
            return bundle.any_diverged() ? 2 : 0;
        }
        if (gen->parsed()) {
            for (const auto& f : mcvi::harness::gen_fixtures(fixtures_dir))
                std::printf("wrote %s\n", f.c_str());
            return 0;
        }
        mcvi::harness::ReportBundle bundle = mcvi::harness::report_from_dir(report_dir);
        print_bundle(bundle);
        return bundle.any_diverged() ? 2 : 0;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
