#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "epieval/curve.hpp"
#include "epieval/errors.hpp"
#include "epieval/features.hpp"
#include "epieval/harness.hpp"
#include "epieval/measures.hpp"

namespace epieval {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(trim(field));
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

inline double parse_double(const std::string& s, int line) {
    double value = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end)
        fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + s + "'");
    return value;
}

inline long long parse_int(const std::string& s, int line) {
    long long value = 0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end)
        fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad integer '" + s + "'");
    return value;
}

/// Header lookup: returns the column index of `name`, or nullopt.
struct Header {
    std::map<std::string, std::size_t> columns;

    std::optional<std::size_t> find(const std::string& name) const {
        auto it = columns.find(name);
        if (it == columns.end()) return std::nullopt;
        return it->second;
    }

    std::size_t require(const std::string& name) const {
        auto idx = find(name);
        if (!idx) fail(ErrorCode::ParseError, "missing required column '" + name + "'");
        return *idx;
    }
};

inline Header parse_header(const std::string& line) {
    Header h;
    const auto fields = split(line, ',');
    for (std::size_t i = 0; i < fields.size(); ++i) h.columns[fields[i]] = i;
    return h;
}

inline std::optional<std::string> cell(const std::vector<std::string>& row,
                                       std::optional<std::size_t> idx) {
    if (!idx || *idx >= row.size() || row[*idx].empty()) return std::nullopt;
    return row[*idx];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Observed surveillance ingestion
// ---------------------------------------------------------------------------

/// Parses header + rows (region, season, week, ili_count[, total_visits]
/// [, population]) into one validated curve per (region, season), in file
/// order. A header-only file yields an empty list.
inline std::vector<EpiCurve> parse_observed(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::ParseError, "empty file");
    const detail::Header header = detail::parse_header(line);
    const std::size_t c_region = header.require("region");
    const std::size_t c_season = header.require("season");
    const std::size_t c_week = header.require("week");
    const std::size_t c_count = header.require("ili_count");
    const auto c_visits = header.find("total_visits");
    const auto c_pop = header.find("population");

    struct Group {
        std::vector<std::pair<Week, double>> rows;
        std::vector<double> visits;
        std::optional<long long> population;
    };
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, Group> groups;

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto row = detail::split(line, ',');
        auto field = [&](std::size_t idx) -> std::string {
            if (idx >= row.size())
                fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": short row");
            return row[idx];
        };
        const std::pair<std::string, std::string> key{field(c_region), field(c_season)};
        auto it = groups.find(key);
        if (it == groups.end()) {
            order.push_back(key);
            it = groups.emplace(key, Group{}).first;
        }
        Group& g = it->second;
        g.rows.emplace_back(static_cast<Week>(detail::parse_int(field(c_week), line_no)),
                            detail::parse_double(field(c_count), line_no));
        if (const auto v = detail::cell(row, c_visits))
            g.visits.push_back(detail::parse_double(*v, line_no));
        if (const auto p = detail::cell(row, c_pop); p && !g.population)
            g.population = detail::parse_int(*p, line_no);
    }

    std::vector<EpiCurve> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        Group& g = groups.at(key);
        EpiCurve curve = validate_curve(g.rows, key.first, key.second);
        if (!g.visits.empty()) {
            if (g.visits.size() != g.rows.size())
                fail(ErrorCode::ParseError,
                     "region " + key.first + ": total_visits present on some rows only");
            attach_total_visits(curve, std::move(g.visits));
        }
        curve.population = g.population;
        out.push_back(std::move(curve));
    }
    return out;
}

inline std::vector<EpiCurve> ingest_observed(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    return parse_observed(in);
}

// ---------------------------------------------------------------------------
// Forecast ingestion
// ---------------------------------------------------------------------------

/// Parsed forecast file: deterministic methods become run families bound to
/// their target curves, stochastic methods become per-week series.
struct ForecastData {
    std::vector<ForecastSet> deterministic;
    std::vector<StochasticSeries> stochastic;
};

/// Rows carry (method, region, k, target_week) plus exactly one payload
/// shape per method: `value` alone (deterministic), `value` + `replicate_id`
/// [+ `weight`] (replicates), or `mean`,`variance`,`n_samples` (moments).
/// Methods mixing shapes are rejected.
inline ForecastData parse_forecasts(std::istream& in,
                                    const std::vector<std::shared_ptr<const EpiCurve>>& targets) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::ParseError, "empty file");
    const detail::Header header = detail::parse_header(line);
    const std::size_t c_method = header.require("method");
    const std::size_t c_region = header.require("region");
    const auto c_season = header.find("season");
    const auto c_k = header.find("k");
    const std::size_t c_week = header.require("target_week");
    const auto c_value = header.find("value");
    const auto c_rep = header.find("replicate_id");
    const auto c_weight = header.find("weight");
    const auto c_mean = header.find("mean");
    const auto c_var = header.find("variance");
    const auto c_n = header.find("n_samples");

    auto find_target = [&](const std::string& region, const std::optional<std::string>& season,
                           int line_no) {
        std::shared_ptr<const EpiCurve> found;
        for (const auto& t : targets) {
            if (t->region_id != region) continue;
            if (season && t->season_id != *season) continue;
            if (found)
                fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": region " +
                                                region + " is ambiguous without a season column");
            found = t;
        }
        if (!found)
            fail(ErrorCode::ParseError,
                 "line " + std::to_string(line_no) + ": no observed curve for region " + region);
        return found;
    };

    enum class RowKind { Deterministic, Replicate, Moment };
    struct MethodData {
        std::optional<RowKind> kind;
        std::shared_ptr<const EpiCurve> target;
        // deterministic: k -> (target_week -> value)
        std::map<Week, std::map<Week, double>> runs;
        // stochastic: week -> replicate rows / moment row
        std::map<Week, std::vector<std::tuple<long long, double, std::optional<double>>>> reps;
        std::map<Week, std::tuple<double, double, long long>> moments;
    };
    std::vector<std::pair<std::string, std::string>> order;  // (method, region)
    std::map<std::pair<std::string, std::string>, MethodData> methods;

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto row = detail::split(line, ',');
        auto field = [&](std::size_t idx) -> std::string {
            if (idx >= row.size())
                fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": short row");
            return row[idx];
        };
        const std::string method = field(c_method);
        const std::string region = field(c_region);
        const auto season = detail::cell(row, c_season);
        const auto value = detail::cell(row, c_value);
        const auto rep = detail::cell(row, c_rep);
        const auto mean = detail::cell(row, c_mean);
        const auto variance = detail::cell(row, c_var);
        const auto n_samples = detail::cell(row, c_n);
        const Week week = static_cast<Week>(detail::parse_int(field(c_week), line_no));

        RowKind kind;
        if (mean || variance || n_samples) {
            if (value || rep)
                fail(ErrorCode::MixedForecastKinds,
                     "line " + std::to_string(line_no) + ": both value and moment columns set");
            if (!(mean && variance && n_samples))
                fail(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                                ": moment rows need mean, variance, n_samples");
            kind = RowKind::Moment;
        } else if (rep) {
            if (!value)
                fail(ErrorCode::ParseError,
                     "line " + std::to_string(line_no) + ": replicate row without value");
            kind = RowKind::Replicate;
        } else if (value) {
            kind = RowKind::Deterministic;
        } else {
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": no payload");
        }

        const std::pair<std::string, std::string> key{method, region};
        auto it = methods.find(key);
        if (it == methods.end()) {
            order.push_back(key);
            it = methods.emplace(key, MethodData{}).first;
            it->second.target = find_target(region, season, line_no);
        }
        MethodData& data = it->second;
        if (data.kind && *data.kind != kind)
            fail(ErrorCode::MixedForecastKinds, "method " + method + " mixes forecast kinds");
        data.kind = kind;

        switch (kind) {
            case RowKind::Deterministic: {
                const auto k_str = detail::cell(row, c_k);
                if (!k_str)
                    fail(ErrorCode::ParseError,
                         "line " + std::to_string(line_no) + ": deterministic row without k");
                const Week k = static_cast<Week>(detail::parse_int(*k_str, line_no));
                auto [pos, inserted] =
                    data.runs[k].emplace(week, detail::parse_double(*value, line_no));
                if (!inserted)
                    fail(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                                    ": duplicate (k, target_week) row");
                break;
            }
            case RowKind::Replicate: {
                std::optional<double> weight;
                if (const auto w = detail::cell(row, c_weight))
                    weight = detail::parse_double(*w, line_no);
                data.reps[week].emplace_back(detail::parse_int(*rep, line_no),
                                             detail::parse_double(*value, line_no), weight);
                break;
            }
            case RowKind::Moment: {
                auto [pos, inserted] = data.moments.emplace(
                    week, std::tuple{detail::parse_double(*mean, line_no),
                                     detail::parse_double(*variance, line_no),
                                     detail::parse_int(*n_samples, line_no)});
                if (!inserted)
                    fail(ErrorCode::ParseError,
                         "line " + std::to_string(line_no) + ": duplicate moment row");
                break;
            }
        }
    }

    ForecastData out;
    for (const auto& key : order) {
        MethodData& data = methods.at(key);
        if (*data.kind == RowKind::Deterministic) {
            ForecastSet set(key.first, data.target);
            for (auto& [k, weeks] : data.runs) {
                // rows at or before k are the run's fitted values
                std::vector<double> fitted;
                std::vector<double> predicted;
                std::optional<Week> expected;
                for (const auto& [w, v] : weeks) {
                    if (expected && w != *expected)
                        fail(ErrorCode::ParseError, "method " + key.first + " k=" +
                                                        std::to_string(k) + ": gap at week " +
                                                        std::to_string(*expected));
                    expected = w + 1;
                    (w <= k ? fitted : predicted).push_back(v);
                }
                if (!fitted.empty() && weeks.begin()->first + static_cast<Week>(fitted.size()) - 1 != k)
                    fail(ErrorCode::ParseError, "method " + key.first + " k=" +
                                                    std::to_string(k) +
                                                    ": fitted weeks must run up to k");
                if (predicted.empty())
                    fail(ErrorCode::ParseError, "method " + key.first + " k=" +
                                                    std::to_string(k) + ": no predicted weeks");
                if (fitted.empty() && weeks.begin()->first != k + 1)
                    fail(ErrorCode::ParseError, "method " + key.first + " k=" +
                                                    std::to_string(k) +
                                                    ": predictions must start at week k+1");
                set.add_run(
                    make_forecast_run(key.first, k, std::move(predicted), std::move(fitted)));
            }
            out.deterministic.push_back(std::move(set));
        } else {
            StochasticSeries series;
            series.method_id = key.first;
            series.region_id = key.second;
            auto check_contiguous = [&](Week w, Week expected) {
                if (w != expected)
                    fail(ErrorCode::ParseError, "method " + key.first + ": stochastic weeks " +
                                                    "must be contiguous, gap at week " +
                                                    std::to_string(expected));
            };
            if (*data.kind == RowKind::Replicate) {
                series.start_week = data.reps.begin()->first;
                Week expected = series.start_week;
                for (auto& [week, rows] : data.reps) {
                    check_contiguous(week, expected++);
                    std::sort(rows.begin(), rows.end());
                    Replicates r;
                    const bool weighted = std::get<2>(rows.front()).has_value();
                    for (const auto& [id, v, wgt] : rows) {
                        if (wgt.has_value() != weighted)
                            fail(ErrorCode::ParseError, "method " + key.first +
                                                            ": weights on some replicates only");
                        r.samples.push_back(v);
                        if (weighted) r.weights.push_back(*wgt);
                    }
                    series.per_week.emplace_back(std::move(r));
                }
            } else {
                series.start_week = data.moments.begin()->first;
                Week expected = series.start_week;
                for (const auto& [week, m] : data.moments) {
                    check_contiguous(week, expected++);
                    const auto& [mean, variance, n] = m;
                    if (variance < 0.0)
                        fail(ErrorCode::ParseError,
                             "method " + key.first + ": negative variance");
                    series.per_week.emplace_back(DistSpec::from_sample_stats(
                        mean, std::sqrt(variance), static_cast<int>(n)));
                }
            }
            series.validate();
            out.stochastic.push_back(std::move(series));
        }
    }
    return out;
}

inline ForecastData ingest_forecasts(const std::string& path,
                                     const std::vector<std::shared_ptr<const EpiCurve>>& targets) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    return parse_forecasts(in, targets);
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Synthetic-input block: generates the observed curves and forecast
/// families in-process instead of reading files.
struct HarnessSpec {
    int regions = 1;
    SynthConfig synth;
    std::vector<PerturbConfig> methods;
};

struct RunConfig {
    std::string observed_path;
    std::string forecasts_path;
    std::vector<std::string> regions;  // empty = all
    std::string season;                // empty = all
    std::vector<FeatureId> features{FeatureId::PeakValue,   FeatureId::PeakTime,
                                    FeatureId::TakeoffValue, FeatureId::TakeoffTime,
                                    FeatureId::IdLength,     FeatureId::IdStart,
                                    FeatureId::Speed};
    FeatureConfig feature_config;
    std::vector<MeasureId> measures{MeasureId::MAE,   MeasureId::RMSE,  MeasureId::MAPE,
                                    MeasureId::sMAPE, MeasureId::MdAPE, MeasureId::MdsAPE};
    Mode mode = Mode::Forecasting;
    /// Derive the season-start threshold per region from its other seasons
    /// (CDC-baseline style) instead of a fixed percent.
    bool derive_season_threshold = false;
    std::optional<Week> k_begin;  // one-step window; defaults to start+1 and T-1
    std::optional<Week> k_end;
    std::size_t stochastic_size = 10000;
    std::optional<std::uint64_t> stochastic_seed;
    std::string out_dir = "out";
    std::set<std::string> formats{"csv", "json", "svg"};
    std::optional<HarnessSpec> harness;

    void validate() const {
        if (features.empty()) fail(ErrorCode::ConfigError, "no features selected");
        if (measures.empty()) fail(ErrorCode::ConfigError, "no measures selected");
        for (MeasureId id : measures)
            if (id == MeasureId::APE || id == MeasureId::sAPE)
                fail(ErrorCode::ConfigError, "APE/sAPE are per-pair measures, not matrix columns");
        if (!harness) {
            if (observed_path.empty()) fail(ErrorCode::ConfigError, "no observed path");
            if (forecasts_path.empty()) fail(ErrorCode::ConfigError, "no forecasts path");
        }
        feature_config.validate();
        for (const std::string& f : formats)
            if (f != "csv" && f != "json" && f != "svg")
                fail(ErrorCode::ConfigError, "unknown output format '" + f + "'");
    }
};

/// Flat `key = value` file with `[section]` headers and `#` comments.
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string section;
    std::string line;
    int line_no = 0;
    auto bad = [&](const std::string& msg) {
        fail(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = detail::trim(line.substr(0, line.find('#')));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') bad("unterminated section header");
            section = text.substr(1, text.size() - 2);
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) bad("expected key = value");
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));

        auto as_list = [&]() { return detail::split(value, ','); };
        auto as_double = [&]() { return detail::parse_double(value, line_no); };
        auto as_int = [&]() { return detail::parse_int(value, line_no); };

        if (section == "input") {
            if (key == "observed") cfg.observed_path = value;
            else if (key == "forecasts") cfg.forecasts_path = value;
            else bad("unknown key '" + key + "' in [input]");
        } else if (section == "features") {
            if (key == "list") {
                cfg.features.clear();
                for (const std::string& name : as_list()) {
                    const auto id = feature_from_string(name);
                    if (!id) bad("unknown feature '" + name + "'");
                    cfg.features.push_back(*id);
                }
            } else if (key == "takeoff_delta_t") cfg.feature_config.takeoff_delta_t = static_cast<int>(as_int());
            else if (key == "takeoff_threshold") cfg.feature_config.takeoff_threshold = as_double();
            else if (key == "id_threshold") cfg.feature_config.id_threshold = as_double();
            else if (key == "season_threshold") {
                if (value == "derived") cfg.derive_season_threshold = true;
                else cfg.feature_config.season_threshold = as_double();
            } else bad("unknown key '" + key + "' in [features]");
        } else if (section == "measures") {
            if (key == "list") {
                cfg.measures.clear();
                for (const std::string& name : as_list()) {
                    const auto id = measure_from_string(name);
                    if (!id) bad("unknown measure '" + name + "'");
                    cfg.measures.push_back(*id);
                }
            } else bad("unknown key '" + key + "' in [measures]");
        } else if (section == "run") {
            if (key == "mode") {
                if (value == "forecasting") cfg.mode = Mode::Forecasting;
                else if (value == "calibration") cfg.mode = Mode::Calibration;
                else bad("mode must be forecasting or calibration");
            } else if (key == "regions") {
                cfg.regions = as_list();
            } else if (key == "season") cfg.season = value;
            else if (key == "k_begin") cfg.k_begin = static_cast<Week>(as_int());
            else if (key == "k_end") cfg.k_end = static_cast<Week>(as_int());
            else bad("unknown key '" + key + "' in [run]");
        } else if (section == "stochastic") {
            if (key == "size") cfg.stochastic_size = static_cast<std::size_t>(as_int());
            else if (key == "seed") cfg.stochastic_seed = static_cast<std::uint64_t>(as_int());
            else bad("unknown key '" + key + "' in [stochastic]");
        } else if (section == "output") {
            if (key == "directory") cfg.out_dir = value;
            else if (key == "formats") {
                cfg.formats.clear();
                for (const std::string& f : as_list()) cfg.formats.insert(f);
            } else bad("unknown key '" + key + "' in [output]");
        } else if (section == "harness") {
            if (!cfg.harness) cfg.harness.emplace();
            HarnessSpec& h = *cfg.harness;
            if (key == "regions") h.regions = static_cast<int>(as_int());
            else if (key == "season_length") h.synth.season_length = static_cast<int>(as_int());
            else if (key == "peak_week") h.synth.peak_week = static_cast<Week>(as_int());
            else if (key == "peak_height") h.synth.peak_height = as_double();
            else if (key == "onset_sharpness") h.synth.onset_sharpness = as_double();
            else if (key == "noise_stdev") h.synth.noise_stdev = as_double();
            else if (key == "seed") h.synth.seed = static_cast<std::uint64_t>(as_int());
            else if (key == "method") {
                // name bias shift window noise [seed]
                std::stringstream ss(value);
                PerturbConfig m;
                std::uint64_t seed = 0;
                if (!(ss >> m.method_id >> m.amplitude_bias >> m.phase_shift >>
                      m.smoothing_window >> m.noise_stdev))
                    bad("method needs: name bias shift window noise [seed]");
                if (ss >> seed) m.seed = seed;
                m.validate();
                h.methods.push_back(std::move(m));
            } else bad("unknown key '" + key + "' in [harness]");
        } else {
            bad("unknown section '" + section + "'");
        }
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigError, "cannot open config " + path);
    return parse_config(in);
}

}  // namespace epieval
