#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epieval/epieval.hpp"

namespace {

int run_evaluate(const std::string& config_path, const std::string& mode,
                 const std::vector<std::string>& regions, const std::string& out_dir,
                 const std::string& formats, std::uint64_t seed, bool seed_set) {
    using namespace epieval;
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        if (mode == "forecasting") cfg.mode = Mode::Forecasting;
        else if (mode == "calibration") cfg.mode = Mode::Calibration;
        else if (!mode.empty()) fail(ErrorCode::ConfigError, "unknown mode '" + mode + "'");
        if (!regions.empty()) cfg.regions = regions;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!formats.empty()) {
            cfg.formats.clear();
            for (const std::string& f : detail::split(formats, ',')) cfg.formats.insert(f);
        }
        if (seed_set) cfg.stochastic_seed = seed;
        cfg.validate();
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    ReportBundle bundle;
    try {
        bundle = run_pipeline(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::vector<std::string> written;
    try {
        written = emit_bundle(bundle, cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    for (const RegionReport& r : bundle.regions) {
        std::cout << "region " << r.region_id << " (" << r.season_id << "): "
                  << r.tables.size() << " feature tables";
        if (r.stochastic_table) std::cout << ", 1 stochastic table";
        std::cout << "\n";
        for (const std::string& w : r.warnings) std::cerr << "  warning: " << w << "\n";
    }
    for (const std::string& f : bundle.failed_regions) std::cerr << "failed region: " << f << "\n";
    std::cout << written.size() << " files written to " << cfg.out_dir << "\n";
    return bundle.failed_regions.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evaluate and rank epidemic forecasting methods against observed curves"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode;
    std::vector<std::string> regions;
    std::string out_dir;
    std::string formats;
    std::uint64_t seed = 0;

    CLI::App* evaluate = app.add_subcommand("evaluate", "Run the evaluation pipeline");
    evaluate->add_option("--config", config_path, "Run configuration file")->required();
    evaluate->add_option("--mode", mode, "forecasting or calibration");
    evaluate->add_option("--region", regions, "Restrict evaluation to these region ids");
    evaluate->add_option("--out", out_dir, "Output directory");
    evaluate->add_option("--format", formats, "Comma-separated list: csv,json,svg");
    CLI::Option* seed_opt =
        evaluate->add_option("--seed", seed, "Seed for bootstrap sampling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    return run_evaluate(config_path, mode, regions, out_dir, formats, seed,
                        seed_opt->count() > 0);
}
