#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "epieval/curve.hpp"
#include "epieval/errors.hpp"
#include "epieval/features.hpp"
#include "epieval/harness.hpp"
#include "epieval/io.hpp"
#include "epieval/measures.hpp"
#include "epieval/ranking.hpp"
#include "epieval/stochastic.hpp"
#include "epieval/svg.hpp"

namespace epieval {

/// Shortest round-trip decimal form; shared by every text emitter so CSV
/// bytes survive a JSON round trip unchanged.
inline std::string format_double(double v) {
    char buf[40];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, result.ptr);
}

// ---------------------------------------------------------------------------
// Report data model
// ---------------------------------------------------------------------------

/// One scored table: per-method errors for each measure column, their
/// competition ranks, and the consensus summary.
struct RankTable {
    std::string label;
    std::vector<std::string> methods;
    std::vector<MeasureId> measures;
    std::vector<std::vector<double>> errors;
    std::vector<std::vector<int>> ranks;
    std::vector<double> consensus;
    std::vector<double> median_rank;
};

struct ConsensusTable {
    std::vector<std::string> methods;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> cells;
    std::vector<double> average;
    std::vector<double> median;  // empty at the region level (level 3)
};

struct HorizonTable {
    std::string feature;
    std::vector<Week> prediction_times;
    std::vector<std::string> methods;
    std::vector<std::vector<double>> average_ranks;  // NaN = method absent at that k
};

struct OneStepTable {
    Week start_week = 0;
    std::vector<double> observed;
    std::vector<std::string> methods;
    std::vector<std::vector<double>> curves;
};

struct RegionReport {
    std::string region_id;
    std::string season_id;
    std::vector<std::pair<std::string, double>> observed_features;
    std::vector<RankTable> tables;
    std::optional<RankTable> stochastic_table;
    std::optional<ConsensusTable> level2;
    std::vector<HorizonTable> horizon;
    std::optional<OneStepTable> one_step;
    std::vector<std::pair<std::string, double>> one_step_mape;
    std::vector<std::pair<std::string, int>> clusters;
    std::vector<std::string> warnings;
};

struct ReportBundle {
    std::string mode;
    std::vector<RegionReport> regions;
    std::optional<ConsensusTable> level3;
    std::vector<std::string> failed_regions;
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct PipelineInputs {
    /// Evaluation targets, one region-season each.
    std::vector<std::shared_ptr<const EpiCurve>> curves;
    /// Every ingested curve (season filter not applied); source of past
    /// seasons for derived thresholds. Empty means "same as curves".
    std::vector<std::shared_ptr<const EpiCurve>> reference_curves;
    std::vector<ForecastSet> deterministic;
    std::vector<StochasticSeries> stochastic;
};

/// Reads the configured files, or generates harness data when a [harness]
/// block is present. Region/season filters apply to file inputs.
inline PipelineInputs load_inputs(const RunConfig& cfg) {
    PipelineInputs inputs;
    if (cfg.harness) {
        const HarnessSpec& h = *cfg.harness;
        if (h.methods.empty()) fail(ErrorCode::ConfigError, "harness block has no methods");
        for (int r = 1; r <= h.regions; ++r) {
            SynthConfig synth = h.synth;
            synth.seed = derive_seed(h.synth.seed, 1000 + static_cast<std::uint64_t>(r));
            auto curve = std::make_shared<const EpiCurve>(
                generate_curve(synth, "synthetic-" + std::to_string(r), "season-1"));
            std::vector<PerturbConfig> methods = h.methods;
            for (auto& m : methods)
                m.seed = derive_seed(m.seed, 2000 + static_cast<std::uint64_t>(r));
            const Week k_first = cfg.k_begin.value_or(curve->start_week + 1);
            const Week k_last = cfg.k_end.value_or(curve->last_week() - 1);
            auto sets = generate_forecast_family(curve, methods, k_first, k_last);
            inputs.curves.push_back(curve);
            for (auto& s : sets) inputs.deterministic.push_back(std::move(s));
        }
        return inputs;
    }

    for (EpiCurve& curve : ingest_observed(cfg.observed_path)) {
        if (!cfg.regions.empty() &&
            std::find(cfg.regions.begin(), cfg.regions.end(), curve.region_id) ==
                cfg.regions.end())
            continue;
        auto shared = std::make_shared<const EpiCurve>(std::move(curve));
        inputs.reference_curves.push_back(shared);
        if (!cfg.season.empty() && shared->season_id != cfg.season) continue;
        inputs.curves.push_back(std::move(shared));
    }
    if (inputs.curves.empty()) fail(ErrorCode::ConfigError, "no observed curves after filtering");
    ForecastData data = ingest_forecasts(cfg.forecasts_path, inputs.curves);
    inputs.deterministic = std::move(data.deterministic);
    inputs.stochastic = std::move(data.stochastic);
    return inputs;
}

namespace detail {

inline std::vector<MeasureId> stochastic_measure_columns(const std::vector<MeasureId>& wanted) {
    std::vector<MeasureId> out;
    for (MeasureId id : wanted)
        if (id == MeasureId::MAE || id == MeasureId::RMSE || id == MeasureId::MAPE ||
            id == MeasureId::sMAPE || id == MeasureId::MdAPE || id == MeasureId::MdsAPE)
            out.push_back(id);
    return out;
}

inline RankTable make_rank_table(std::string label, std::vector<std::string> methods,
                                 std::vector<MeasureId> measures,
                                 std::vector<std::vector<double>> errors) {
    ErrorMatrix matrix;
    matrix.methods = methods;
    for (MeasureId id : measures) matrix.columns.push_back(to_string(id));
    matrix.cells = errors;
    const RankMatrix rm = rank_matrix(matrix);
    RankTable table;
    table.label = std::move(label);
    table.methods = std::move(methods);
    table.measures = std::move(measures);
    table.errors = std::move(errors);
    table.ranks = rm.ranks;
    table.consensus = rm.consensus;
    table.median_rank = rm.median_rank;
    return table;
}

}  // namespace detail

/// Scores one region: per-feature error/rank tables, level-2 consensus,
/// horizon rankings, the one-step-ahead comparison with MAPE clusters, and
/// a curve-level table for stochastic methods. Failures of individual
/// features or methods degrade to warnings. `past_seasons` feeds the derived
/// season-start threshold when the config asks for one.
inline RegionReport evaluate_region(const RunConfig& base_cfg,
                                    const std::shared_ptr<const EpiCurve>& curve,
                                    const std::vector<const ForecastSet*>& sets,
                                    const std::vector<const StochasticSeries*>& stochastic,
                                    const std::vector<EpiCurve>& past_seasons = {}) {
    RegionReport report;
    report.region_id = curve->region_id;
    report.season_id = curve->season_id;

    RunConfig cfg = base_cfg;
    if (cfg.derive_season_threshold && !cfg.feature_config.season_threshold) {
        if (past_seasons.empty()) {
            report.warnings.push_back("season threshold: no past seasons to derive from");
        } else {
            try {
                cfg.feature_config.season_threshold = season_baseline(past_seasons);
                report.warnings.push_back(
                    "season threshold derived from " + std::to_string(past_seasons.size()) +
                    " past season(s): " + format_double(*cfg.feature_config.season_threshold) +
                    "%");
            } catch (const Error& e) {
                report.warnings.push_back(std::string("season threshold: ") + e.what());
            }
        }
    }

    const FeatureVector observed_fv = extract_all(*curve, cfg.feature_config);
    for (FeatureId id :
         {FeatureId::PeakValue, FeatureId::PeakTime, FeatureId::TakeoffValue,
          FeatureId::TakeoffTime, FeatureId::IdLength, FeatureId::IdStart, FeatureId::SeasonStart,
          FeatureId::Speed}) {
        if (const auto v = feature_value(observed_fv, id))
            report.observed_features.emplace_back(to_string(id), *v);
    }
    for (const std::string& note : observed_fv.notes) report.warnings.push_back(note);

    // per-feature tables + horizon rankings
    for (FeatureId feature : cfg.features) {
        std::vector<std::string> methods;
        std::vector<std::vector<double>> rows;
        std::vector<FeatureErrorSeries> series_list;
        bool feature_ok = true;
        for (const ForecastSet* set : sets) {
            FeatureErrorSeries series;
            try {
                series = feature_error_series(*set, feature, cfg.feature_config, cfg.mode);
            } catch (const Error& e) {
                report.warnings.push_back(std::string(to_string(feature)) + ": " + e.what());
                feature_ok = false;
                break;
            }
            if (series.points.empty()) {
                report.warnings.push_back(std::string(to_string(feature)) + ": method " +
                                          set->method_id() + " produced no usable runs");
                continue;
            }
            std::vector<double> y, x;
            for (const auto& p : series.points) {
                y.push_back(p.observed);
                x.push_back(p.predicted);
            }
            std::vector<double> row;
            try {
                for (MeasureId id : cfg.measures) row.push_back(compute_measure(id, y, x));
            } catch (const Error& e) {
                report.warnings.push_back(std::string(to_string(feature)) + ": " +
                                          set->method_id() + ": " + e.what());
                continue;
            }
            methods.push_back(set->method_id());
            rows.push_back(std::move(row));
            series_list.push_back(std::move(series));
        }
        if (!feature_ok || methods.empty()) continue;
        report.tables.push_back(
            detail::make_rank_table(to_string(feature), methods, cfg.measures, rows));
        const HorizonRanking hr = horizon_ranking(series_list);
        HorizonTable ht;
        ht.feature = to_string(feature);
        ht.prediction_times = hr.prediction_times;
        ht.methods = hr.methods;
        ht.average_ranks = hr.average_ranks;
        report.horizon.push_back(std::move(ht));
    }

    // level-2 consensus over features, on methods present in every table
    if (!report.tables.empty()) {
        std::vector<std::string> common = report.tables.front().methods;
        for (const RankTable& t : report.tables) {
            std::vector<std::string> kept;
            for (const std::string& m : common)
                if (std::find(t.methods.begin(), t.methods.end(), m) != t.methods.end())
                    kept.push_back(m);
            common = std::move(kept);
        }
        if (!common.empty()) {
            ConsensusTable level2;
            level2.methods = common;
            for (const RankTable& t : report.tables) level2.columns.push_back(t.label);
            for (const std::string& m : common) {
                std::vector<double> row;
                for (const RankTable& t : report.tables) {
                    const auto it = std::find(t.methods.begin(), t.methods.end(), m);
                    row.push_back(t.consensus[static_cast<std::size_t>(
                        std::distance(t.methods.begin(), it))]);
                }
                level2.cells.push_back(std::move(row));
            }
            ErrorMatrix matrix;
            matrix.methods = level2.methods;
            matrix.columns = level2.columns;
            matrix.cells = level2.cells;
            for (const ConsensusRow& row : consensus_over_features(matrix)) {
                level2.average.push_back(row.average);
                level2.median.push_back(row.median);
            }
            report.level2 = std::move(level2);
        } else {
            report.warnings.push_back("level-2 consensus skipped: no method in every table");
        }
    }

    // one-step-ahead curves, their corrected MAPE, and the method clusters
    if (!sets.empty()) {
        const Week t_b =
            std::max(cfg.k_begin.value_or(curve->start_week + 1), curve->start_week + 1);
        const Week t_e = std::min(cfg.k_end.value_or(curve->last_week() - 1),
                                  static_cast<Week>(curve->last_week() - 1));
        if (t_b > t_e)
            fail(ErrorCode::InvalidRange, "one-step window is empty for this season");
        OneStepTable table;
        table.start_week = t_b + 1;
        for (Week w = t_b + 1; w <= t_e + 1; ++w) table.observed.push_back(curve->value_at(w));
        std::map<std::string, double> mape;
        for (const ForecastSet* set : sets) {
            try {
                OneStepCurve c = one_step_ahead_curve(*set, t_b, t_e);
                mape[set->method_id()] =
                    compute_measure(MeasureId::cMAPE, table.observed, c.values);
                table.methods.push_back(set->method_id());
                table.curves.push_back(std::move(c.values));
            } catch (const Error& e) {
                report.warnings.push_back("one-step-ahead: " + set->method_id() + ": " +
                                          e.what());
            }
        }
        if (!table.methods.empty()) {
            report.one_step = std::move(table);
            for (const auto& [m, v] : mape) report.one_step_mape.emplace_back(m, v);
            for (const auto& [m, g] : cluster_by_mape(mape)) report.clusters.emplace_back(m, g);
        }
    }

    // curve-level measures for stochastic methods
    if (!stochastic.empty()) {
        if (!cfg.stochastic_seed)
            fail(ErrorCode::ConfigError, "stochastic forecasts need an explicit seed");
        const std::vector<MeasureId> columns = detail::stochastic_measure_columns(cfg.measures);
        std::vector<std::string> methods;
        std::vector<std::vector<double>> rows;
        for (const StochasticSeries* series : stochastic) {
            std::vector<DistSpec> specs;
            std::vector<double> observed;
            bool in_range = true;
            for (std::size_t i = 0; i < series->per_week.size(); ++i) {
                const Week w = series->start_week + static_cast<Week>(i);
                if (!curve->contains_week(w)) {
                    in_range = false;
                    break;
                }
                observed.push_back(curve->value_at(w));
                const auto& entry = series->per_week[i];
                if (const auto* reps = std::get_if<Replicates>(&entry))
                    specs.push_back(DistSpec::empirical(reps->samples, reps->weights));
                else
                    specs.push_back(std::get<DistSpec>(entry));
            }
            if (!in_range) {
                report.warnings.push_back("stochastic method " + series->method_id +
                                          " predicts weeks outside the observed season");
                continue;
            }
            const StochasticMeasures m =
                measures_vs_point(specs, observed, cfg.stochastic_size, *cfg.stochastic_seed);
            std::vector<double> row;
            for (MeasureId id : columns) row.push_back(m.totals.at(id));
            methods.push_back(series->method_id);
            rows.push_back(std::move(row));
        }
        if (!methods.empty() && !columns.empty())
            report.stochastic_table =
                detail::make_rank_table("stochastic_curve", methods, columns, rows);
    }

    return report;
}

/// Full evaluation over prepared inputs: regions are scored concurrently
/// (inputs are immutable and shared read-only), then the level-3 consensus
/// runs across regions. A failing region is recorded and skipped.
inline ReportBundle evaluate(const RunConfig& cfg, const PipelineInputs& inputs) {
    ReportBundle bundle;
    bundle.mode = to_string(cfg.mode);
    std::vector<std::future<RegionReport>> futures;
    for (const auto& curve : inputs.curves) {
        std::vector<const ForecastSet*> sets;
        for (const ForecastSet& s : inputs.deterministic)
            if (s.target().region_id == curve->region_id &&
                s.target().season_id == curve->season_id)
                sets.push_back(&s);
        std::vector<const StochasticSeries*> stochastic;
        for (const StochasticSeries& s : inputs.stochastic)
            if (s.region_id == curve->region_id) stochastic.push_back(&s);
        std::vector<EpiCurve> past_seasons;
        if (cfg.derive_season_threshold) {
            const auto& reference =
                inputs.reference_curves.empty() ? inputs.curves : inputs.reference_curves;
            for (const auto& other : reference)
                if (other->region_id == curve->region_id &&
                    other->season_id != curve->season_id && other->total_visits)
                    past_seasons.push_back(*other);
        }
        futures.push_back(std::async(
            std::launch::async,
            [&cfg, curve, sets = std::move(sets), stochastic = std::move(stochastic),
             past_seasons = std::move(past_seasons)]() {
                return evaluate_region(cfg, curve, sets, stochastic, past_seasons);
            }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) {
        try {
            bundle.regions.push_back(futures[i].get());
        } catch (const std::exception& e) {
            bundle.failed_regions.push_back(inputs.curves[i]->region_id + ": " + e.what());
        }
    }

    // level-3 consensus over regions that produced a level-2 table
    std::vector<const RegionReport*> scored;
    for (const RegionReport& r : bundle.regions)
        if (r.level2) scored.push_back(&r);
    if (scored.size() >= 1) {
        std::vector<std::string> common = scored.front()->level2->methods;
        for (const RegionReport* r : scored) {
            std::vector<std::string> kept;
            for (const std::string& m : common)
                if (std::find(r->level2->methods.begin(), r->level2->methods.end(), m) !=
                    r->level2->methods.end())
                    kept.push_back(m);
            common = std::move(kept);
        }
        if (!common.empty()) {
            ConsensusTable level3;
            level3.methods = common;
            for (const RegionReport* r : scored) level3.columns.push_back(r->region_id);
            for (const std::string& m : common) {
                std::vector<double> row;
                for (const RegionReport* r : scored) {
                    const auto it =
                        std::find(r->level2->methods.begin(), r->level2->methods.end(), m);
                    row.push_back(r->level2->average[static_cast<std::size_t>(
                        std::distance(r->level2->methods.begin(), it))]);
                }
                level3.cells.push_back(std::move(row));
            }
            ErrorMatrix matrix;
            matrix.methods = level3.methods;
            matrix.columns = level3.columns;
            matrix.cells = level3.cells;
            level3.average = consensus_over_regions(matrix);
            bundle.level3 = std::move(level3);
        }
    }
    return bundle;
}

inline ReportBundle run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    return evaluate(cfg, load_inputs(cfg));
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline json cell_or_null(double v) { return std::isnan(v) ? json() : json(v); }
inline double cell_from(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json to_json(const RankTable& t) {
    json j;
    j["label"] = t.label;
    j["methods"] = t.methods;
    json measures = json::array();
    for (MeasureId id : t.measures) measures.push_back(to_string(id));
    j["measures"] = measures;
    j["errors"] = t.errors;
    j["ranks"] = t.ranks;
    j["consensus"] = t.consensus;
    j["median"] = t.median_rank;
    return j;
}

inline RankTable rank_table_from(const json& j) {
    RankTable t;
    t.label = j.at("label").get<std::string>();
    t.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& name : j.at("measures"))
        t.measures.push_back(*measure_from_string(name.get<std::string>()));
    t.errors = j.at("errors").get<std::vector<std::vector<double>>>();
    t.ranks = j.at("ranks").get<std::vector<std::vector<int>>>();
    t.consensus = j.at("consensus").get<std::vector<double>>();
    t.median_rank = j.at("median").get<std::vector<double>>();
    return t;
}

inline json to_json(const ConsensusTable& t) {
    json j;
    j["methods"] = t.methods;
    j["columns"] = t.columns;
    j["cells"] = t.cells;
    j["average"] = t.average;
    j["median"] = t.median;
    return j;
}

inline ConsensusTable consensus_table_from(const json& j) {
    ConsensusTable t;
    t.methods = j.at("methods").get<std::vector<std::string>>();
    t.columns = j.at("columns").get<std::vector<std::string>>();
    t.cells = j.at("cells").get<std::vector<std::vector<double>>>();
    t.average = j.at("average").get<std::vector<double>>();
    t.median = j.at("median").get<std::vector<double>>();
    return t;
}

}  // namespace detail

inline std::string bundle_to_json(const ReportBundle& bundle) {
    using nlohmann::json;
    json root;
    root["mode"] = bundle.mode;
    root["failed_regions"] = bundle.failed_regions;
    json regions = json::array();
    for (const RegionReport& r : bundle.regions) {
        json jr;
        jr["region"] = r.region_id;
        jr["season"] = r.season_id;
        json features = json::array();
        for (const auto& [name, value] : r.observed_features)
            features.push_back({{"feature", name}, {"value", value}});
        jr["observed_features"] = features;
        json tables = json::array();
        for (const RankTable& t : r.tables) tables.push_back(detail::to_json(t));
        jr["tables"] = tables;
        if (r.stochastic_table) jr["stochastic_table"] = detail::to_json(*r.stochastic_table);
        if (r.level2) jr["level2"] = detail::to_json(*r.level2);
        json horizon = json::array();
        for (const HorizonTable& h : r.horizon) {
            json jh;
            jh["feature"] = h.feature;
            jh["prediction_times"] = h.prediction_times;
            jh["methods"] = h.methods;
            json grid = json::array();
            for (const auto& row : h.average_ranks) {
                json jrow = json::array();
                for (double v : row) jrow.push_back(detail::cell_or_null(v));
                grid.push_back(jrow);
            }
            jh["average_ranks"] = grid;
            horizon.push_back(jh);
        }
        jr["horizon"] = horizon;
        if (r.one_step) {
            json js;
            js["start_week"] = r.one_step->start_week;
            js["observed"] = r.one_step->observed;
            js["methods"] = r.one_step->methods;
            js["curves"] = r.one_step->curves;
            jr["one_step"] = js;
        }
        json mape = json::array();
        for (const auto& [m, v] : r.one_step_mape) mape.push_back({{"method", m}, {"mape", v}});
        jr["one_step_mape"] = mape;
        json clusters = json::array();
        for (const auto& [m, g] : r.clusters) clusters.push_back({{"method", m}, {"group", g}});
        jr["clusters"] = clusters;
        jr["warnings"] = r.warnings;
        regions.push_back(jr);
    }
    root["regions"] = regions;
    if (bundle.level3) root["level3"] = detail::to_json(*bundle.level3);
    return root.dump(2) + "\n";
}

inline ReportBundle bundle_from_json(const std::string& text) {
    using nlohmann::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("bad bundle json: ") + e.what());
    }
    ReportBundle bundle;
    bundle.mode = root.at("mode").get<std::string>();
    bundle.failed_regions = root.at("failed_regions").get<std::vector<std::string>>();
    for (const auto& jr : root.at("regions")) {
        RegionReport r;
        r.region_id = jr.at("region").get<std::string>();
        r.season_id = jr.at("season").get<std::string>();
        for (const auto& f : jr.at("observed_features"))
            r.observed_features.emplace_back(f.at("feature").get<std::string>(),
                                             f.at("value").get<double>());
        for (const auto& t : jr.at("tables")) r.tables.push_back(detail::rank_table_from(t));
        if (jr.contains("stochastic_table"))
            r.stochastic_table = detail::rank_table_from(jr.at("stochastic_table"));
        if (jr.contains("level2")) r.level2 = detail::consensus_table_from(jr.at("level2"));
        for (const auto& jh : jr.at("horizon")) {
            HorizonTable h;
            h.feature = jh.at("feature").get<std::string>();
            h.prediction_times = jh.at("prediction_times").get<std::vector<Week>>();
            h.methods = jh.at("methods").get<std::vector<std::string>>();
            for (const auto& jrow : jh.at("average_ranks")) {
                std::vector<double> row;
                for (const auto& cell : jrow) row.push_back(detail::cell_from(cell));
                h.average_ranks.push_back(std::move(row));
            }
            r.horizon.push_back(std::move(h));
        }
        if (jr.contains("one_step")) {
            OneStepTable t;
            t.start_week = jr.at("one_step").at("start_week").get<Week>();
            t.observed = jr.at("one_step").at("observed").get<std::vector<double>>();
            t.methods = jr.at("one_step").at("methods").get<std::vector<std::string>>();
            t.curves = jr.at("one_step").at("curves").get<std::vector<std::vector<double>>>();
            r.one_step = std::move(t);
        }
        for (const auto& m : jr.at("one_step_mape"))
            r.one_step_mape.emplace_back(m.at("method").get<std::string>(),
                                         m.at("mape").get<double>());
        for (const auto& c : jr.at("clusters"))
            r.clusters.emplace_back(c.at("method").get<std::string>(), c.at("group").get<int>());
        r.warnings = jr.at("warnings").get<std::vector<std::string>>();
        bundle.regions.push_back(std::move(r));
    }
    if (root.contains("level3")) bundle.level3 = detail::consensus_table_from(root.at("level3"));
    return bundle;
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
    if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

inline std::string rank_table_csv(const RankTable& t, bool ranks) {
    std::string out = "method";
    for (MeasureId id : t.measures) out += std::string(",") + to_string(id);
    if (ranks) out += ",consensus,median";
    out += "\n";
    for (std::size_t m = 0; m < t.methods.size(); ++m) {
        out += t.methods[m];
        if (ranks) {
            for (int r : t.ranks[m]) out += "," + std::to_string(r);
            out += "," + format_double(t.consensus[m]) + "," + format_double(t.median_rank[m]);
        } else {
            for (double v : t.errors[m]) out += "," + format_double(v);
        }
        out += "\n";
    }
    return out;
}

inline std::string consensus_table_csv(const ConsensusTable& t) {
    std::string out = "method";
    for (const std::string& c : t.columns) out += "," + c;
    out += ",average";
    if (!t.median.empty()) out += ",median";
    out += "\n";
    for (std::size_t m = 0; m < t.methods.size(); ++m) {
        out += t.methods[m];
        for (double v : t.cells[m]) out += "," + format_double(v);
        out += "," + format_double(t.average[m]);
        if (!t.median.empty()) out += "," + format_double(t.median[m]);
        out += "\n";
    }
    return out;
}

}  // namespace detail

/// Writes the CSV views of a bundle; returns the emitted paths.
inline std::vector<std::string> emit_csv(const ReportBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        const fs::path path = fs::path(dir) / name;
        detail::write_file(path, content);
        written.push_back(path.string());
    };
    for (const RegionReport& r : bundle.regions) {
        const std::string prefix = detail::sanitize(r.region_id);
        for (const RankTable& t : r.tables) {
            emit(prefix + "_" + detail::sanitize(t.label) + "_errors.csv",
                 detail::rank_table_csv(t, false));
            emit(prefix + "_" + detail::sanitize(t.label) + "_ranks.csv",
                 detail::rank_table_csv(t, true));
        }
        if (r.stochastic_table) {
            emit(prefix + "_stochastic_errors.csv",
                 detail::rank_table_csv(*r.stochastic_table, false));
            emit(prefix + "_stochastic_ranks.csv",
                 detail::rank_table_csv(*r.stochastic_table, true));
        }
        if (r.level2)
            emit(prefix + "_level2_consensus.csv", detail::consensus_table_csv(*r.level2));
        for (const HorizonTable& h : r.horizon) {
            std::string csv = "k";
            for (const std::string& m : h.methods) csv += "," + m;
            csv += "\n";
            for (std::size_t ki = 0; ki < h.prediction_times.size(); ++ki) {
                csv += std::to_string(h.prediction_times[ki]);
                for (std::size_t m = 0; m < h.methods.size(); ++m) {
                    const double v = h.average_ranks[m][ki];
                    csv += ",";
                    if (!std::isnan(v)) csv += format_double(v);
                }
                csv += "\n";
            }
            emit(prefix + "_" + detail::sanitize(h.feature) + "_horizon.csv", csv);
        }
        if (r.one_step) {
            std::string csv = "week,observed";
            for (const std::string& m : r.one_step->methods) csv += "," + m;
            csv += "\n";
            for (std::size_t i = 0; i < r.one_step->observed.size(); ++i) {
                csv += std::to_string(r.one_step->start_week + static_cast<Week>(i));
                csv += "," + format_double(r.one_step->observed[i]);
                for (const auto& c : r.one_step->curves) csv += "," + format_double(c[i]);
                csv += "\n";
            }
            emit(prefix + "_one_step_ahead.csv", csv);
        }
        if (!r.clusters.empty()) {
            std::string csv = "method,mape,group\n";
            for (std::size_t i = 0; i < r.clusters.size(); ++i) {
                csv += r.clusters[i].first + "," + format_double(r.one_step_mape[i].second) +
                       "," + std::to_string(r.clusters[i].second) + "\n";
            }
            emit(prefix + "_mape_clusters.csv", csv);
        }
    }
    if (bundle.level3) emit("level3_consensus.csv", detail::consensus_table_csv(*bundle.level3));
    return written;
}

inline std::vector<std::string> emit_json(const ReportBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path path = fs::path(dir) / "bundle.json";
    detail::write_file(path, bundle_to_json(bundle));
    return {path.string()};
}

/// Writes the static plots: a consensus box-whisker and a horizon step chart
/// per (region, feature), a one-step-ahead overlay per region, and an
/// overall consensus box across regions when there are several.
inline std::vector<std::string> emit_plots(const ReportBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        const fs::path path = fs::path(dir) / name;
        detail::write_file(path, content);
        written.push_back(path.string());
    };
    for (const RegionReport& r : bundle.regions) {
        const std::string prefix = detail::sanitize(r.region_id);
        for (const RankTable& t : r.tables) {
            std::vector<stats::BoxStats> boxes;
            for (const auto& row : t.ranks)
                boxes.push_back(stats::box_stats(std::vector<double>(row.begin(), row.end())));
            emit(prefix + "_" + detail::sanitize(t.label) + "_consensus_box.svg",
                 svg::box_chart(r.region_id + ": rank spread for " + t.label, t.methods, boxes));
        }
        for (const HorizonTable& h : r.horizon)
            emit(prefix + "_" + detail::sanitize(h.feature) + "_horizon.svg",
                 svg::step_chart(r.region_id + ": horizon ranking for " + h.feature,
                                 h.prediction_times, h.methods, h.average_ranks, "average rank"));
        if (r.one_step)
            emit(prefix + "_one_step_overlay.svg",
                 svg::overlay_chart(r.region_id + ": one-step-ahead curves",
                                    r.one_step->start_week, r.one_step->observed,
                                    r.one_step->methods, r.one_step->curves));
    }
    if (bundle.level3 && bundle.regions.size() >= 2) {
        std::vector<stats::BoxStats> boxes;
        for (const auto& row : bundle.level3->cells) boxes.push_back(stats::box_stats(row));
        emit("overall_consensus_box.svg",
             svg::box_chart("consensus across regions", bundle.level3->methods, boxes));
    }
    return written;
}

/// Emits every requested format; returns all written paths.
inline std::vector<std::string> emit_bundle(const ReportBundle& bundle, const RunConfig& cfg) {
    std::vector<std::string> written;
    if (cfg.formats.count("csv"))
        for (auto& p : emit_csv(bundle, cfg.out_dir)) written.push_back(std::move(p));
    if (cfg.formats.count("json"))
        for (auto& p : emit_json(bundle, cfg.out_dir)) written.push_back(std::move(p));
    if (cfg.formats.count("svg"))
        for (auto& p : emit_plots(bundle, cfg.out_dir)) written.push_back(std::move(p));
    return written;
}

}  // namespace epieval
