#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "epieval/epieval.hpp"

using namespace epieval;
namespace fs = std::filesystem;

namespace {

RunConfig rich_config(const std::string& out_dir) {
    RunConfig cfg;
    cfg.features = {FeatureId::PeakValue,  FeatureId::PeakTime, FeatureId::TakeoffValue,
                    FeatureId::TakeoffTime, FeatureId::IdLength, FeatureId::IdStart,
                    FeatureId::SeasonStart, FeatureId::Speed};
    cfg.feature_config.id_threshold = 200.0;
    cfg.feature_config.season_threshold = 2.0;
    cfg.out_dir = out_dir;
    cfg.stochastic_seed = 9;
    return cfg;
}

/// One synthetic region with visits attached (so all eight features are
/// observable) and six graded methods, the first of them exact.
PipelineInputs rich_inputs() {
    SynthConfig synth;
    synth.season_length = 30;
    synth.peak_week = 15;
    synth.peak_height = 1200.0;
    synth.onset_sharpness = 0.4;
    EpiCurve curve = generate_curve(synth, "region-a", "s1");
    attach_total_visits(curve, std::vector<double>(curve.length(), 20000.0));
    auto shared = std::make_shared<const EpiCurve>(std::move(curve));

    std::vector<PerturbConfig> methods(6);
    methods[0].method_id = "exact";
    methods[1] = {.method_id = "scaled-up", .amplitude_bias = 1.15};
    methods[2] = {.method_id = "late", .amplitude_bias = 1.05, .phase_shift = 1};
    methods[3] = {.method_id = "smoothed", .smoothing_window = 5};
    methods[4] = {.method_id = "noisy", .noise_stdev = 60.0, .seed = 3};
    methods[5] = {.method_id = "wild", .amplitude_bias = 1.6, .phase_shift = 2,
                  .noise_stdev = 90.0, .seed = 4};

    PipelineInputs inputs;
    inputs.curves.push_back(shared);
    for (auto& set : generate_forecast_family(shared, methods, 2, shared->last_week() - 1))
        inputs.deterministic.push_back(std::move(set));
    return inputs;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> read_dir(const std::string& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::directory_iterator(dir))
        out[entry.path().filename().string()] = read_file(entry.path());
    return out;
}

}  // namespace

TEST_CASE("pipeline scores every feature and ranks the exact method first") {
    const RunConfig cfg = rich_config("test_out/pipeline");
    const ReportBundle bundle = evaluate(cfg, rich_inputs());
    REQUIRE(bundle.failed_regions.empty());
    REQUIRE(bundle.regions.size() == 1);
    const RegionReport& r = bundle.regions.front();
    REQUIRE(r.tables.size() == 8);
    REQUIRE(r.horizon.size() == 8);
    for (const RankTable& t : r.tables) {
        const auto it = std::find(t.methods.begin(), t.methods.end(), "exact");
        REQUIRE(it != t.methods.end());
        const std::size_t idx =
            static_cast<std::size_t>(std::distance(t.methods.begin(), it));
        REQUIRE(t.consensus[idx] == 1.0);
        for (double c : t.consensus) REQUIRE(c >= t.consensus[idx]);
    }
    REQUIRE(r.level2.has_value());
    const auto exact_it =
        std::find(r.level2->methods.begin(), r.level2->methods.end(), "exact");
    const std::size_t exact_idx =
        static_cast<std::size_t>(std::distance(r.level2->methods.begin(), exact_it));
    REQUIRE(r.level2->average[exact_idx] == 1.0);
    for (double a : r.level2->average) REQUIRE(a >= 1.0);

    REQUIRE(r.one_step.has_value());
    REQUIRE(r.one_step->methods.size() == 6);
    bool exact_in_group_1 = false;
    for (const auto& [m, g] : r.clusters)
        if (m == "exact") exact_in_group_1 = (g == 1);
    REQUIRE(exact_in_group_1);
}

TEST_CASE("plot emission writes one box and one horizon chart per feature plus the overlay") {
    const std::string dir = "test_out/plots";
    fs::remove_all(dir);
    const RunConfig cfg = rich_config(dir);
    const ReportBundle bundle = evaluate(cfg, rich_inputs());
    const auto files = emit_plots(bundle, dir);
    REQUIRE(files.size() == 17);  // 8 box + 8 horizon + 1 overlay
    std::size_t boxes = 0, horizons = 0, overlays = 0;
    for (const auto& f : files) {
        if (f.find("consensus_box.svg") != std::string::npos) ++boxes;
        if (f.find("horizon.svg") != std::string::npos) ++horizons;
        if (f.find("one_step_overlay.svg") != std::string::npos) ++overlays;
    }
    REQUIRE(boxes == 8);
    REQUIRE(horizons == 8);
    REQUIRE(overlays == 1);

    SECTION("re-emission is byte-identical") {
        const auto first = read_dir(dir);
        const std::string dir2 = "test_out/plots_again";
        fs::remove_all(dir2);
        emit_plots(bundle, dir2);
        const auto second = read_dir(dir2);
        REQUIRE(first.size() == second.size());
        for (const auto& [name, content] : first) REQUIRE(second.at(name) == content);
    }
}

TEST_CASE("empty bundles emit nothing") {
    ReportBundle empty;
    empty.mode = "forecasting";
    REQUIRE(emit_plots(empty, "test_out/empty").empty());
    REQUIRE(emit_csv(empty, "test_out/empty").empty());
}

TEST_CASE("bundle json round trip re-emits identical csv bytes") {
    const RunConfig cfg = rich_config("unused");
    const ReportBundle bundle = evaluate(cfg, rich_inputs());
    const std::string dir_a = "test_out/csv_a";
    const std::string dir_b = "test_out/csv_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    emit_csv(bundle, dir_a);
    const ReportBundle reloaded = bundle_from_json(bundle_to_json(bundle));
    emit_csv(reloaded, dir_b);
    const auto a = read_dir(dir_a);
    const auto b = read_dir(dir_b);
    REQUIRE(a.size() == b.size());
    REQUIRE_FALSE(a.empty());
    for (const auto& [name, content] : a) REQUIRE(b.at(name) == content);
}

TEST_CASE("pipeline output is deterministic across rebuilds") {
    const RunConfig cfg = rich_config("unused");
    const std::string first = bundle_to_json(evaluate(cfg, rich_inputs()));
    const std::string second = bundle_to_json(evaluate(cfg, rich_inputs()));
    REQUIRE(first == second);
}

TEST_CASE("stochastic methods get their own curve-level table") {
    RunConfig cfg = rich_config("unused");
    PipelineInputs inputs = rich_inputs();
    const EpiCurve& curve = *inputs.curves.front();

    StochasticSeries exact;
    exact.method_id = "stoch-exact";
    exact.region_id = curve.region_id;
    exact.start_week = 5;
    StochasticSeries biased;
    biased.method_id = "stoch-biased";
    biased.region_id = curve.region_id;
    biased.start_week = 5;
    for (Week w = 5; w <= 20; ++w) {
        const double y = curve.value_at(w);
        exact.per_week.push_back(Replicates{{y, y, y}, {}});
        biased.per_week.push_back(DistSpec::normal(1.5 * y + 10.0, 4.0));
    }
    inputs.stochastic.push_back(std::move(exact));
    inputs.stochastic.push_back(std::move(biased));

    const ReportBundle bundle = evaluate(cfg, inputs);
    const RegionReport& r = bundle.regions.front();
    REQUIRE(r.stochastic_table.has_value());
    REQUIRE(r.stochastic_table->methods ==
            std::vector<std::string>{"stoch-exact", "stoch-biased"});
    REQUIRE(r.stochastic_table->consensus[0] == 1.0);
    REQUIRE(r.stochastic_table->errors[0][0] == 0.0);

    SECTION("a missing stochastic seed fails the region") {
        cfg.stochastic_seed.reset();
        const ReportBundle failed = evaluate(cfg, inputs);
        REQUIRE_FALSE(failed.failed_regions.empty());
    }
}

TEST_CASE("season-start threshold can be derived from past seasons") {
    RunConfig cfg = rich_config("unused");
    cfg.feature_config.season_threshold.reset();
    cfg.derive_season_threshold = true;
    PipelineInputs inputs = rich_inputs();

    // two past seasons, constant low counts with uniform percentages
    for (double percent : {1.0, 1.2}) {
        std::vector<std::pair<Week, double>> raw;
        for (Week w = 1; w <= 60; ++w) raw.emplace_back(w, 1.0);
        EpiCurve past = validate_curve(raw, "region-a", "past-" + std::to_string(percent));
        attach_total_visits(past, std::vector<double>(60, 100.0 / percent));
        inputs.reference_curves.push_back(std::make_shared<const EpiCurve>(std::move(past)));
    }
    inputs.reference_curves.push_back(inputs.curves.front());

    const ReportBundle bundle = evaluate(cfg, inputs);
    REQUIRE(bundle.failed_regions.empty());
    const RegionReport& r = bundle.regions.front();
    bool derived_note = false;
    for (const auto& w : r.warnings)
        if (w.find("season threshold derived from 2") != std::string::npos) derived_note = true;
    REQUIRE(derived_note);
    bool has_season_start = false;
    for (const auto& [name, value] : r.observed_features)
        if (name == "season_start") has_season_start = true;
    REQUIRE(has_season_start);
    REQUIRE(r.tables.size() == 8);
}

TEST_CASE("emitted rank tables mirror the reference layout") {
    RankTable t = detail::make_rank_table(
        "peak_value", {"M1", "M2", "M3", "M4", "M5", "M6"},
        {MeasureId::MAE, MeasureId::RMSE, MeasureId::MAPE, MeasureId::sMAPE, MeasureId::MdAPE,
         MeasureId::MdsAPE},
        {{4992.0, 9838.6, 4.9, 1.04, 1.7, 1.03},
         {4825.2, 9770.4, 4.7, 0.99, 1.4, 0.95},
         {3263.0, 5146.5, 3.2, 0.96, 1.5, 1.01},
         {2990.7, 4651.3, 2.9, 0.899, 1.1, 0.85},
         {3523.2, 5334.8, 3.4, 0.95, 2.1, 1.01},
         {3310.9, 4948.5, 3.2, 0.896, 1.5, 0.85}});
    const std::string csv = detail::rank_table_csv(t, true);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    REQUIRE(line == "method,mae,rmse,mape,smape,mdape,mdsape,consensus,median");
    std::getline(lines, line);  // M1: ranks 6,6,6,6,5,6 -> consensus 35/6
    REQUIRE(line.rfind("M1,6,6,6,6,5,6,", 0) == 0);
    std::getline(lines, line);
    std::getline(lines, line);
    std::getline(lines, line);  // M4: ranks 1,1,1,2,1,1 -> consensus 7/6
    REQUIRE(line.rfind("M4,1,1,1,2,1,1,", 0) == 0);
}

TEST_CASE("harness-driven pipeline over several regions reaches level 3") {
    std::istringstream config_text(
        "[harness]\n"
        "regions = 2\n"
        "season_length = 28\n"
        "peak_week = 13\n"
        "peak_height = 900\n"
        "onset_sharpness = 0.45\n"
        "seed = 21\n"
        "method = exact 1.0 0 1 0\n"
        "method = high 1.3 0 1 0\n"
        "method = shifted 1.1 1 1 25 2\n"
        "[features]\n"
        "list = peak_value, peak_time, id_length, speed\n"
        "id_threshold = 150\n"
        "[output]\n"
        "directory = test_out/harness_run\n");
    RunConfig cfg = parse_config(config_text);
    cfg.validate();
    const ReportBundle bundle = run_pipeline(cfg);
    REQUIRE(bundle.regions.size() == 2);
    REQUIRE(bundle.level3.has_value());
    REQUIRE(bundle.level3->columns.size() == 2);
    const auto& methods = bundle.level3->methods;
    const auto exact_it = std::find(methods.begin(), methods.end(), "exact");
    REQUIRE(exact_it != methods.end());
    const std::size_t idx = static_cast<std::size_t>(std::distance(methods.begin(), exact_it));
    for (double a : bundle.level3->average) REQUIRE(a >= bundle.level3->average[idx]);

    fs::remove_all(cfg.out_dir);
    const auto files = emit_bundle(bundle, cfg);
    bool has_level3 = false, has_overall_box = false, has_bundle_json = false;
    for (const auto& f : files) {
        if (f.find("level3_consensus.csv") != std::string::npos) has_level3 = true;
        if (f.find("overall_consensus_box.svg") != std::string::npos) has_overall_box = true;
        if (f.find("bundle.json") != std::string::npos) has_bundle_json = true;
    }
    REQUIRE(has_level3);
    REQUIRE(has_overall_box);
    REQUIRE(has_bundle_json);
}
