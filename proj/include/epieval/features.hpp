#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epieval/curve.hpp"
#include "epieval/errors.hpp"
#include "epieval/series.hpp"

namespace epieval {

/// Thresholds for feature extraction. The take-off defaults follow common
/// ILI practice (slope threshold 150 cases/week over a 2-week window); the
/// intensity-duration threshold is disease-specific and must be supplied.
struct FeatureConfig {
    int takeoff_delta_t = 2;
    double takeoff_threshold = 150.0;
    std::optional<double> id_threshold;
    /// Flu-percentage threshold (percent) for the season-start feature.
    std::optional<double> season_threshold;

    void validate() const {
        if (takeoff_delta_t < 1) fail(ErrorCode::InvalidConfig, "takeoff_delta_t must be >= 1");
        if (takeoff_threshold <= 0.0) fail(ErrorCode::InvalidConfig, "takeoff_threshold must be > 0");
        if (id_threshold && *id_threshold <= 0.0)
            fail(ErrorCode::InvalidConfig, "id_threshold must be > 0");
        if (season_threshold && *season_threshold <= 0.0)
            fail(ErrorCode::InvalidConfig, "season_threshold must be > 0");
    }
};

struct PeakResult {
    double value = 0.0;
    Week week = 0;
};

/// Series maximum and the earliest week attaining it.
inline PeakResult peak(WeeklySeries series) {
    if (series.empty()) fail(ErrorCode::EmptySeries, "peak of empty series");
    std::size_t best = 0;
    for (std::size_t i = 1; i < series.size(); ++i)
        if (series[i] > series[best]) best = i;
    return {series[best], series.week_at(best)};
}

struct TakeOffResult {
    double slope = 0.0;  // cases/week per week
    Week week = 0;       // start week of the take-off window
};

/// Earliest week whose forward slope over delta_t weeks reaches the
/// threshold: s = (x(t+dt) - x(t)) / dt. Empty when never reached.
inline std::optional<TakeOffResult> first_take_off(WeeklySeries series, const FeatureConfig& cfg) {
    cfg.validate();
    const int dt = cfg.takeoff_delta_t;
    if (static_cast<int>(series.size()) <= dt)
        fail(ErrorCode::SeriesTooShort, "series shorter than take-off window");
    for (std::size_t i = 0; i + static_cast<std::size_t>(dt) < series.size(); ++i) {
        const double slope = (series[i + static_cast<std::size_t>(dt)] - series[i]) / dt;
        if (slope >= cfg.takeoff_threshold) return TakeOffResult{slope, series.week_at(i)};
    }
    return std::nullopt;
}

struct IntensityDurationResult {
    int length = 0;        // total weeks above threshold
    Week start = 0;        // first week above threshold
    int longest_run = 0;   // longest consecutive stretch
    Week last = 0;         // last week above threshold
};

/// Weeks with counts strictly above the threshold. Length counts all such
/// weeks; the longest consecutive run is reported separately.
inline std::optional<IntensityDurationResult> intensity_duration(WeeklySeries series,
                                                                 double threshold) {
    if (series.empty()) fail(ErrorCode::EmptySeries, "intensity duration of empty series");
    if (threshold <= 0.0) fail(ErrorCode::InvalidConfig, "id threshold must be > 0");
    IntensityDurationResult out;
    int run = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i] > threshold) {
            if (out.length == 0) out.start = series.week_at(i);
            out.last = series.week_at(i);
            ++out.length;
            ++run;
            out.longest_run = std::max(out.longest_run, run);
        } else {
            run = 0;
        }
    }
    if (out.length == 0) return std::nullopt;
    return out;
}

/// Slope of the line from the window's start point to the peak:
/// (x_peak - x_start) / (t_peak - t_start).
inline double speed_of_epidemic(WeeklySeries series, Week start_week) {
    if (series.empty()) fail(ErrorCode::EmptySeries, "speed of empty series");
    if (start_week < series.start_week || start_week > series.last_week())
        fail(ErrorCode::InvalidRange, "start week outside series");
    const PeakResult p = peak(series);
    if (p.week == start_week)
        fail(ErrorCode::DegeneratePeakAtStart, "peak coincides with start week");
    const double x_start = series[static_cast<std::size_t>(start_week - series.start_week)];
    return (p.value - x_start) / static_cast<double>(p.week - start_week);
}

inline double speed_of_epidemic(WeeklySeries series) {
    return speed_of_epidemic(series, series.start_week);
}

inline double total_attack_rate(double n_total_infected, double n_population_start) {
    if (n_population_start <= 0.0) fail(ErrorCode::ZeroPopulation, "population must be > 0");
    if (n_total_infected < 0.0) fail(ErrorCode::NegativeCount, "infected count must be >= 0");
    return n_total_infected / n_population_start;
}

inline std::map<std::string, double> age_attack_rate(
    const std::map<std::string, double>& counts_by_group,
    const std::map<std::string, double>& pop_by_group) {
    std::map<std::string, double> out;
    for (const auto& [group, count] : counts_by_group) {
        auto it = pop_by_group.find(group);
        if (it == pop_by_group.end())
            fail(ErrorCode::MissingGroupPopulation, "no population for group " + group);
        if (it->second <= 0.0) fail(ErrorCode::ZeroPopulation, "group " + group);
        out[group] = count / it->second;
    }
    return out;
}

inline double secondary_attack_rate(double n_second_generation, double n_contacts) {
    if (n_contacts <= 0.0) fail(ErrorCode::ZeroContacts, "contact count must be > 0");
    return n_second_generation / n_contacts;
}

/// Weekly ILI share of all patient visits, in percent.
inline std::vector<double> flu_percentage(const EpiCurve& curve) {
    if (!curve.total_visits) fail(ErrorCode::MissingDenominator, "curve has no total_visits");
    std::vector<double> out;
    out.reserve(curve.counts.size());
    for (std::size_t i = 0; i < curve.counts.size(); ++i)
        out.push_back(100.0 * curve.counts[i] / (*curve.total_visits)[i]);
    return out;
}

/// Season-start threshold from past seasons, CDC-baseline style: collect the
/// flu percentages of every "non-influenza" week (runs of two or more
/// consecutive weeks whose ILI count stays below 2% of that season's total),
/// pool them across seasons, and return mean plus two sample stdevs.
inline double season_baseline(const std::vector<EpiCurve>& past_seasons) {
    if (past_seasons.empty()) fail(ErrorCode::EmptySeries, "no past seasons");
    std::vector<double> pooled;
    for (const EpiCurve& season : past_seasons) {
        const std::vector<double> percents = flu_percentage(season);
        double total = 0.0;
        for (double c : season.counts) total += c;
        const double cutoff = 0.02 * total;
        std::size_t i = 0;
        while (i < season.counts.size()) {
            if (season.counts[i] < cutoff) {
                std::size_t j = i;
                while (j < season.counts.size() && season.counts[j] < cutoff) ++j;
                if (j - i >= 2)
                    for (std::size_t t = i; t < j; ++t) pooled.push_back(percents[t]);
                i = j;
            } else {
                ++i;
            }
        }
    }
    if (pooled.empty())
        fail(ErrorCode::NoNonInfluenzaWeeks, "no run of two consecutive low-ILI weeks");
    return stats::mean(pooled) + 2.0 * stats::sample_stdev(pooled);
}

/// Earliest week whose percentage strictly exceeds the threshold.
inline std::optional<Week> season_start(WeeklySeries percent_series, double threshold) {
    if (threshold <= 0.0) fail(ErrorCode::InvalidConfig, "season threshold must be > 0");
    for (std::size_t i = 0; i < percent_series.size(); ++i)
        if (percent_series[i] > threshold) return percent_series.week_at(i);
    return std::nullopt;
}

/// The extracted feature values for one curve. Fields whose inputs are
/// missing, or whose extraction failed, stay empty; `notes` says why.
struct FeatureVector {
    double peak_value = 0.0;
    Week peak_week = 0;
    std::optional<double> takeoff_value;
    std::optional<Week> takeoff_week;
    std::optional<int> id_length;
    std::optional<Week> id_start;
    std::optional<double> speed;
    std::optional<Week> season_start;
    std::optional<double> tar;
    std::vector<std::string> notes;
};

/// Extracts every feature computable from the curve and config. Individual
/// failures become absences with a diagnostic note, never a thrown error.
inline FeatureVector extract_all(const EpiCurve& curve, const FeatureConfig& cfg) {
    cfg.validate();
    FeatureVector fv;
    const WeeklySeries series = curve.series();
    const PeakResult p = peak(series);
    fv.peak_value = p.value;
    fv.peak_week = p.week;

    try {
        if (auto takeoff = first_take_off(series, cfg)) {
            fv.takeoff_value = takeoff->slope;
            fv.takeoff_week = takeoff->week;
        } else {
            fv.notes.push_back("take-off: slope never reached threshold");
        }
    } catch (const Error& e) {
        fv.notes.push_back(std::string("take-off: ") + e.what());
    }

    if (cfg.id_threshold) {
        if (auto id = intensity_duration(series, *cfg.id_threshold)) {
            fv.id_length = id->length;
            fv.id_start = id->start;
        } else {
            fv.notes.push_back("intensity duration: no week above threshold");
        }
    } else {
        fv.notes.push_back("intensity duration: no threshold configured");
    }

    try {
        fv.speed = speed_of_epidemic(series);
    } catch (const Error& e) {
        fv.notes.push_back(std::string("speed: ") + e.what());
    }

    if (curve.total_visits && cfg.season_threshold) {
        const std::vector<double> percents = flu_percentage(curve);
        if (auto start = season_start({curve.start_week, percents}, *cfg.season_threshold))
            fv.season_start = *start;
        else
            fv.notes.push_back("season start: percentage never exceeded threshold");
    } else if (!curve.total_visits) {
        fv.notes.push_back("season start: curve has no total_visits");
    } else {
        fv.notes.push_back("season start: no threshold configured");
    }

    if (curve.population) {
        double total = 0.0;
        for (double c : curve.counts) total += c;
        fv.tar = total_attack_rate(total, static_cast<double>(*curve.population));
    } else {
        fv.notes.push_back("attack rate: curve has no population");
    }
    return fv;
}

/// The eight curve features ranked by the evaluation pipeline.
enum class FeatureId {
    PeakValue,
    PeakTime,
    TakeoffValue,
    TakeoffTime,
    IdLength,
    IdStart,
    SeasonStart,
    Speed,
};

inline const char* to_string(FeatureId id) {
    switch (id) {
        case FeatureId::PeakValue: return "peak_value";
        case FeatureId::PeakTime: return "peak_time";
        case FeatureId::TakeoffValue: return "takeoff_value";
        case FeatureId::TakeoffTime: return "takeoff_time";
        case FeatureId::IdLength: return "id_length";
        case FeatureId::IdStart: return "id_start";
        case FeatureId::SeasonStart: return "season_start";
        case FeatureId::Speed: return "speed";
    }
    return "unknown";
}

inline std::optional<FeatureId> feature_from_string(const std::string& name) {
    for (FeatureId id : {FeatureId::PeakValue, FeatureId::PeakTime, FeatureId::TakeoffValue,
                         FeatureId::TakeoffTime, FeatureId::IdLength, FeatureId::IdStart,
                         FeatureId::SeasonStart, FeatureId::Speed})
        if (name == to_string(id)) return id;
    return std::nullopt;
}

/// Scalar view of one feature; week-valued features are returned as their
/// 1-based week number.
inline std::optional<double> feature_value(const FeatureVector& fv, FeatureId id) {
    auto as_double = [](auto opt) -> std::optional<double> {
        if (!opt) return std::nullopt;
        return static_cast<double>(*opt);
    };
    switch (id) {
        case FeatureId::PeakValue: return fv.peak_value;
        case FeatureId::PeakTime: return static_cast<double>(fv.peak_week);
        case FeatureId::TakeoffValue: return fv.takeoff_value;
        case FeatureId::TakeoffTime: return as_double(fv.takeoff_week);
        case FeatureId::IdLength: return as_double(fv.id_length);
        case FeatureId::IdStart: return as_double(fv.id_start);
        case FeatureId::SeasonStart: return as_double(fv.season_start);
        case FeatureId::Speed: return fv.speed;
    }
    return std::nullopt;
}

/// Week at which the observed feature is settled; forecasting-mode error
/// accumulation stops at this week. Value features settle at the week that
/// defines them; the intensity-duration length settles at its last
/// above-threshold week.
inline std::optional<Week> feature_occurrence_week(const EpiCurve& curve,
                                                   const FeatureVector& fv,
                                                   const FeatureConfig& cfg, FeatureId id) {
    switch (id) {
        case FeatureId::PeakValue:
        case FeatureId::PeakTime:
        case FeatureId::Speed:
            return fv.peak_week;
        case FeatureId::TakeoffValue:
        case FeatureId::TakeoffTime:
            return fv.takeoff_week;
        case FeatureId::IdStart:
            return fv.id_start;
        case FeatureId::IdLength: {
            if (!cfg.id_threshold) return std::nullopt;
            auto id_res = intensity_duration(curve.series(), *cfg.id_threshold);
            if (!id_res) return std::nullopt;
            return id_res->last;
        }
        case FeatureId::SeasonStart:
            return fv.season_start;
    }
    return std::nullopt;
}

}  // namespace epieval
