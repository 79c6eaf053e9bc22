#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "epieval/errors.hpp"
#include "epieval/series.hpp"

namespace epieval {

/// Error-accumulation window selection. Forecasting scores only weeks after
/// the prediction time; Calibration also scores the fitted weeks before it.
enum class Mode { Forecasting, Calibration };

inline const char* to_string(Mode mode) {
    return mode == Mode::Forecasting ? "forecasting" : "calibration";
}

/// One observed season of weekly new-case counts for one region. Weeks are
/// contiguous, so only the first week number is stored. Immutable by
/// convention after construction; safe to share read-only across threads.
struct EpiCurve {
    std::string region_id;
    std::string season_id;
    Week start_week = 1;
    std::vector<double> counts;
    /// Parallel patients-per-week series; required for flu-percentage work.
    std::optional<std::vector<double>> total_visits;
    /// Population at the start of the season, for attack rates.
    std::optional<long long> population;

    std::size_t length() const { return counts.size(); }
    Week last_week() const { return start_week + static_cast<Week>(counts.size()) - 1; }
    bool contains_week(Week w) const { return w >= start_week && w <= last_week(); }
    double value_at(Week w) const { return counts.at(static_cast<std::size_t>(w - start_week)); }
    WeeklySeries series() const { return {start_week, counts}; }
};

/// Builds a validated curve from raw (week, count) rows. The input order is
/// trusted, never re-sorted: a decreasing week is reported as a gap.
inline EpiCurve validate_curve(const std::vector<std::pair<Week, double>>& raw,
                               std::string region_id = "", std::string season_id = "") {
    if (raw.empty()) fail(ErrorCode::TooShort, "no data rows");
    EpiCurve curve;
    curve.region_id = std::move(region_id);
    curve.season_id = std::move(season_id);
    curve.start_week = raw.front().first;
    curve.counts.reserve(raw.size());
    Week expected = curve.start_week;
    for (const auto& [week, count] : raw) {
        if (week != expected)
            fail(ErrorCode::NonContiguousWeeks,
                 "expected week " + std::to_string(expected) + ", got " + std::to_string(week));
        if (count < 0.0)
            fail(ErrorCode::NegativeCount, "week " + std::to_string(week));
        curve.counts.push_back(count);
        ++expected;
    }
    if (curve.counts.size() < 2) fail(ErrorCode::TooShort, "need at least two weeks");
    return curve;
}

/// Attaches a strictly positive visits series (same length as counts).
inline void attach_total_visits(EpiCurve& curve, std::vector<double> visits) {
    if (visits.size() != curve.counts.size())
        fail(ErrorCode::LengthMismatch, "total_visits length differs from counts");
    for (double v : visits)
        if (v <= 0.0) fail(ErrorCode::MissingDenominator, "total_visits entries must be > 0");
    curve.total_visits = std::move(visits);
}

/// One method's long-term prediction issued at prediction time k.
/// `predicted` covers weeks k+1 .. k+horizon with no gaps; `fitted`, when
/// non-empty, covers the trailing weeks up to and including k.
struct ForecastRun {
    std::string method_id;
    Week prediction_time = 0;
    std::vector<double> predicted;
    std::vector<double> fitted;

    int horizon() const { return static_cast<int>(predicted.size()); }
    Week first_predicted_week() const { return prediction_time + 1; }
    Week last_predicted_week() const { return prediction_time + horizon(); }
    Week first_fitted_week() const {
        return prediction_time - static_cast<Week>(fitted.size()) + 1;
    }
    WeeklySeries predicted_series() const { return {first_predicted_week(), predicted}; }
};

inline ForecastRun make_forecast_run(std::string method_id, Week prediction_time,
                                     std::vector<double> predicted,
                                     std::vector<double> fitted = {}) {
    if (predicted.empty()) fail(ErrorCode::TooShort, "run has no predicted weeks");
    for (double v : predicted)
        if (v < 0.0) fail(ErrorCode::NegativeCount, "predicted counts must be >= 0");
    for (double v : fitted)
        if (v < 0.0) fail(ErrorCode::NegativeCount, "fitted counts must be >= 0");
    ForecastRun run;
    run.method_id = std::move(method_id);
    run.prediction_time = prediction_time;
    run.predicted = std::move(predicted);
    run.fitted = std::move(fitted);
    return run;
}

/// A family of runs for one method against one target curve, keyed by
/// prediction time. Runs extending past the season end are clipped to it.
class ForecastSet {
public:
    ForecastSet() = default;
    ForecastSet(std::string method_id, std::shared_ptr<const EpiCurve> target)
        : method_id_(std::move(method_id)), target_(std::move(target)) {}

    void add_run(ForecastRun run) {
        if (!target_) fail(ErrorCode::InvalidConfig, "forecast set has no target curve");
        if (run.method_id.empty()) run.method_id = method_id_;
        if (run.prediction_time < target_->start_week ||
            run.prediction_time >= target_->last_week())
            fail(ErrorCode::InvalidRange,
                 "prediction time " + std::to_string(run.prediction_time) + " outside season");
        const Week last = target_->last_week();
        if (run.last_predicted_week() > last)
            run.predicted.resize(static_cast<std::size_t>(last - run.prediction_time));
        if (runs_.count(run.prediction_time))
            fail(ErrorCode::InvalidConfig,
                 "duplicate run at prediction time " + std::to_string(run.prediction_time));
        runs_.emplace(run.prediction_time, std::move(run));
    }

    const std::string& method_id() const { return method_id_; }
    const EpiCurve& target() const { return *target_; }
    std::shared_ptr<const EpiCurve> target_ptr() const { return target_; }
    const std::map<Week, ForecastRun>& runs() const { return runs_; }
    bool empty() const { return runs_.empty(); }

private:
    std::string method_id_;
    std::shared_ptr<const EpiCurve> target_;
    std::map<Week, ForecastRun> runs_;
};

/// Week-aligned (observed, predicted) pairs over an evaluation window.
struct AlignedPairs {
    std::vector<Week> weeks;
    std::vector<double> observed;
    std::vector<double> predicted;
    /// Calibration was requested but the run carries no fitted values.
    bool degraded_to_forecasting = false;
};

/// Pairs a run against the observed curve. Forecasting mode pairs only weeks
/// after the prediction time; Calibration mode prepends the run's fitted
/// weeks when it has any, and otherwise degrades to Forecasting with a flag.
inline AlignedPairs align(const EpiCurve& observed, const ForecastRun& run, Mode mode) {
    AlignedPairs out;
    if (mode == Mode::Calibration) {
        if (run.fitted.empty()) {
            out.degraded_to_forecasting = true;
        } else {
            for (std::size_t i = 0; i < run.fitted.size(); ++i) {
                const Week w = run.first_fitted_week() + static_cast<Week>(i);
                if (!observed.contains_week(w) || w > run.prediction_time) continue;
                out.weeks.push_back(w);
                out.observed.push_back(observed.value_at(w));
                out.predicted.push_back(run.fitted[i]);
            }
        }
    }
    for (std::size_t i = 0; i < run.predicted.size(); ++i) {
        const Week w = run.first_predicted_week() + static_cast<Week>(i);
        if (!observed.contains_week(w)) continue;
        out.weeks.push_back(w);
        out.observed.push_back(observed.value_at(w));
        out.predicted.push_back(run.predicted[i]);
    }
    if (out.weeks.empty())
        fail(ErrorCode::EmptyOverlap,
             "no shared weeks between observed curve and run at k=" +
                 std::to_string(run.prediction_time));
    return out;
}

/// Predicted-value distribution for one week: Normal, location-scale
/// Student-t, or a weighted empirical sample. stdev 0 is the point-mass limit.
struct DistSpec {
    enum class Kind { Normal, StudentT, Empirical };

    Kind kind = Kind::Normal;
    double mean = 0.0;
    double stdev = 0.0;   // Normal only
    double dof = 0.0;     // StudentT only, >= 1
    double scale = 0.0;   // StudentT only
    std::vector<double> samples;  // Empirical only
    std::vector<double> weights;  // Empirical, empty = uniform
    /// Size of the sample the spec summarizes (N_x).
    int sample_count = 30;

    static DistSpec normal(double mean, double stdev, int sample_count = 30) {
        DistSpec s;
        s.kind = Kind::Normal;
        s.mean = mean;
        s.stdev = stdev;
        s.sample_count = sample_count;
        s.validate();
        return s;
    }

    static DistSpec student_t(double mean, double dof, double scale, int sample_count) {
        DistSpec s;
        s.kind = Kind::StudentT;
        s.mean = mean;
        s.dof = dof;
        s.scale = scale;
        s.sample_count = sample_count;
        s.validate();
        return s;
    }

    static DistSpec empirical(std::vector<double> samples, std::vector<double> weights = {}) {
        DistSpec s;
        s.kind = Kind::Empirical;
        s.samples = std::move(samples);
        s.weights = std::move(weights);
        s.sample_count = static_cast<int>(s.samples.size());
        s.validate();
        return s;
    }

    static DistSpec point_mass(double value) { return normal(value, 0.0); }

    /// Builds the spec from reported sample statistics: the location spread is
    /// the standard error s/sqrt(n); small samples (n < 30) get a Student-t
    /// with n-1 degrees of freedom, larger ones a Normal.
    static DistSpec from_sample_stats(double sample_mean, double sample_stdev, int n) {
        if (n < 1) fail(ErrorCode::InvalidSpec, "sample count must be >= 1");
        if (sample_stdev < 0.0) fail(ErrorCode::InvalidSpec, "negative sample stdev");
        const double se = sample_stdev / std::sqrt(static_cast<double>(n));
        if (n < 30 && n >= 2) return student_t(sample_mean, static_cast<double>(n - 1), se, n);
        return normal(sample_mean, se, n);
    }

    void validate() const {
        switch (kind) {
            case Kind::Normal:
                if (stdev < 0.0) fail(ErrorCode::InvalidSpec, "normal stdev must be >= 0");
                break;
            case Kind::StudentT:
                if (dof < 1.0) fail(ErrorCode::InvalidSpec, "student-t dof must be >= 1");
                if (scale < 0.0) fail(ErrorCode::InvalidSpec, "student-t scale must be >= 0");
                break;
            case Kind::Empirical:
                if (samples.empty()) fail(ErrorCode::InvalidSpec, "empirical spec has no samples");
                if (!weights.empty()) {
                    if (weights.size() != samples.size())
                        fail(ErrorCode::InvalidSpec, "weights length mismatch");
                    for (double w : weights)
                        if (w <= 0.0) fail(ErrorCode::InvalidSpec, "weights must be positive");
                }
                break;
        }
        if (sample_count < 1) fail(ErrorCode::InvalidSpec, "sample count must be >= 1");
    }
};

/// Per-week uncertain predictions: either raw replicates (optionally
/// weighted) or a distribution spec per week.
struct Replicates {
    std::vector<double> samples;
    std::vector<double> weights;  // empty = uniform; otherwise positive, sums to 1
};

struct StochasticSeries {
    std::string method_id;
    std::string region_id;
    Week start_week = 1;
    std::vector<std::variant<Replicates, DistSpec>> per_week;

    std::size_t length() const { return per_week.size(); }

    void validate() const {
        for (const auto& entry : per_week) {
            if (const auto* reps = std::get_if<Replicates>(&entry)) {
                if (reps->samples.empty())
                    fail(ErrorCode::InvalidSpec, "empty replicate list");
                if (!reps->weights.empty()) {
                    if (reps->weights.size() != reps->samples.size())
                        fail(ErrorCode::InvalidSpec, "replicate weights length mismatch");
                    double sum = 0.0;
                    for (double w : reps->weights) {
                        if (w <= 0.0) fail(ErrorCode::InvalidSpec, "replicate weights must be positive");
                        sum += w;
                    }
                    if (std::abs(sum - 1.0) > 1e-9)
                        fail(ErrorCode::InvalidSpec, "replicate weights must sum to 1");
                }
            } else {
                std::get<DistSpec>(entry).validate();
            }
        }
    }
};

}  // namespace epieval
