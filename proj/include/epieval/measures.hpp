#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epieval/curve.hpp"
#include "epieval/errors.hpp"
#include "epieval/features.hpp"
#include "epieval/series.hpp"

namespace epieval {

/// Deterministic error measures. All use absolute errors; none keeps sign.
/// APE and sAPE score a single (observed, predicted) pair, the rest score
/// paired series.
enum class MeasureId {
    MAE,
    RMSE,
    MAPE,
    cMAPE,
    sMAPE,
    MdAPE,
    MdsAPE,
    MARE,
    RelMAE,
    MASE,
    PB,
    MAAPE,
    NMSE,
    APE,
    sAPE,
};

inline const char* to_string(MeasureId id) {
    switch (id) {
        case MeasureId::MAE: return "mae";
        case MeasureId::RMSE: return "rmse";
        case MeasureId::MAPE: return "mape";
        case MeasureId::cMAPE: return "cmape";
        case MeasureId::sMAPE: return "smape";
        case MeasureId::MdAPE: return "mdape";
        case MeasureId::MdsAPE: return "mdsape";
        case MeasureId::MARE: return "mare";
        case MeasureId::RelMAE: return "relmae";
        case MeasureId::MASE: return "mase";
        case MeasureId::PB: return "pb";
        case MeasureId::MAAPE: return "maape";
        case MeasureId::NMSE: return "nmse";
        case MeasureId::APE: return "ape";
        case MeasureId::sAPE: return "sape";
    }
    return "unknown";
}

inline std::optional<MeasureId> measure_from_string(const std::string& name) {
    for (MeasureId id :
         {MeasureId::MAE, MeasureId::RMSE, MeasureId::MAPE, MeasureId::cMAPE, MeasureId::sMAPE,
          MeasureId::MdAPE, MeasureId::MdsAPE, MeasureId::MARE, MeasureId::RelMAE, MeasureId::MASE,
          MeasureId::PB, MeasureId::MAAPE, MeasureId::NMSE, MeasureId::APE, MeasureId::sAPE})
        if (name == to_string(id)) return id;
    return std::nullopt;
}

/// Zero-observation handling for percentage measures. Corrected substitutes
/// the smallest non-zero observed value for zero denominators; Strict raises
/// DivisionByZero instead.
enum class EpsilonPolicy { Corrected, Strict };

struct MeasureOptions {
    EpsilonPolicy epsilon_policy = EpsilonPolicy::Corrected;
    /// Random-walk reference series for MARE/RelMAE/PB, aligned with the
    /// observed window. Defaults to the one-step naive forecast built from
    /// the observed window itself (first week repeats itself).
    std::optional<std::vector<double>> rw_reference;
};

namespace detail {

inline std::optional<double> min_nonzero(std::span<const double> ys) {
    std::optional<double> eps;
    for (double y : ys)
        if (y != 0.0 && (!eps || std::abs(y) < *eps)) eps = std::abs(y);
    return eps;
}

inline std::vector<double> naive_rw(std::span<const double> ys) {
    std::vector<double> rw(ys.size());
    if (ys.empty()) return rw;
    rw[0] = ys[0];
    for (std::size_t i = 1; i < ys.size(); ++i) rw[i] = ys[i - 1];
    return rw;
}

inline double ape_term(double y, double x, EpsilonPolicy policy,
                       const std::optional<double>& eps) {
    const double e = std::abs(y - x);
    if (y != 0.0) return e / std::abs(y);
    if (policy == EpsilonPolicy::Strict)
        fail(ErrorCode::DivisionByZero, "observed value is zero");
    if (!eps) fail(ErrorCode::DivisionByZero, "all observed values are zero");
    return e / *eps;
}

inline double sape_term(double y, double x, EpsilonPolicy policy) {
    const double denom = y + x;
    if (denom != 0.0) return 2.0 * std::abs(y - x) / std::abs(denom);
    if (policy == EpsilonPolicy::Strict)
        fail(ErrorCode::DivisionByZero, "observed + predicted is zero");
    return 0.0;  // counts are non-negative, so both are zero and the error is too
}

inline double maape_term(double y, double x) {
    if (y != 0.0) return std::atan(std::abs((y - x) / y));
    return y == x ? 0.0 : std::numbers::pi / 2.0;
}

inline void check_paired(std::span<const double> y, std::span<const double> x) {
    if (y.size() != x.size()) fail(ErrorCode::LengthMismatch, "series lengths differ");
    if (y.empty()) fail(ErrorCode::EmptySeries, "empty paired series");
}

}  // namespace detail

/// Absolute percentage error of one pair.
inline double ape(double observed, double predicted,
                  EpsilonPolicy policy = EpsilonPolicy::Strict) {
    return detail::ape_term(observed, predicted, policy, std::nullopt);
}

/// Symmetric absolute percentage error of one pair: 2|y-x| / |y+x|.
inline double sape(double observed, double predicted,
                   EpsilonPolicy policy = EpsilonPolicy::Corrected) {
    return detail::sape_term(observed, predicted, policy);
}

/// Computes one error measure over a paired window. MARE, RelMAE and PB take
/// their random-walk reference from the options; MASE's denominator is the
/// in-sample one-step naive error of the observed window.
inline double compute_measure(MeasureId id, std::span<const double> observed,
                              std::span<const double> predicted,
                              const MeasureOptions& opts = {}) {
    detail::check_paired(observed, predicted);
    const std::size_t n = observed.size();
    const double dn = static_cast<double>(n);

    auto rw_errors = [&]() {
        const std::vector<double> rw =
            opts.rw_reference ? *opts.rw_reference : detail::naive_rw(observed);
        if (rw.size() != n) fail(ErrorCode::LengthMismatch, "rw reference length differs");
        std::vector<double> es(n);
        for (std::size_t i = 0; i < n; ++i) es[i] = observed[i] - rw[i];
        return es;
    };

    switch (id) {
        case MeasureId::MAE: {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += std::abs(observed[i] - predicted[i]);
            return sum / dn;
        }
        case MeasureId::RMSE: {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = observed[i] - predicted[i];
                sum += e * e;
            }
            return std::sqrt(sum / dn);
        }
        case MeasureId::MAPE:
        case MeasureId::cMAPE: {
            const EpsilonPolicy policy =
                id == MeasureId::cMAPE ? EpsilonPolicy::Corrected : opts.epsilon_policy;
            const auto eps = detail::min_nonzero(observed);
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                sum += detail::ape_term(observed[i], predicted[i], policy, eps);
            return sum / dn;
        }
        case MeasureId::sMAPE: {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                sum += detail::sape_term(observed[i], predicted[i], opts.epsilon_policy);
            return sum / dn;
        }
        case MeasureId::MdAPE: {
            const auto eps = detail::min_nonzero(observed);
            std::vector<double> terms(n);
            for (std::size_t i = 0; i < n; ++i)
                terms[i] = detail::ape_term(observed[i], predicted[i], opts.epsilon_policy, eps);
            return stats::median(std::move(terms));
        }
        case MeasureId::MdsAPE: {
            std::vector<double> terms(n);
            for (std::size_t i = 0; i < n; ++i)
                terms[i] = detail::sape_term(observed[i], predicted[i], opts.epsilon_policy);
            return stats::median(std::move(terms));
        }
        case MeasureId::MARE: {
            const std::vector<double> erw = rw_errors();
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = std::abs(observed[i] - predicted[i]);
                if (erw[i] != 0.0) {
                    sum += e / std::abs(erw[i]);
                } else if (e != 0.0) {
                    fail(ErrorCode::DivisionByZero, "random-walk error is zero");
                }
            }
            return sum / dn;
        }
        case MeasureId::RelMAE: {
            const std::vector<double> erw = rw_errors();
            double num = 0.0;
            double den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                num += std::abs(observed[i] - predicted[i]);
                den += std::abs(erw[i]);
            }
            if (den == 0.0) fail(ErrorCode::DivisionByZero, "random walk has zero total error");
            return num / den;
        }
        case MeasureId::MASE: {
            if (n < 2) fail(ErrorCode::SeriesTooShort, "MASE needs at least two weeks");
            double step = 0.0;
            for (std::size_t i = 1; i < n; ++i) step += std::abs(observed[i] - observed[i - 1]);
            step /= static_cast<double>(n - 1);
            if (step == 0.0) fail(ErrorCode::DivisionByZero, "constant observed series");
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += std::abs(observed[i] - predicted[i]);
            return sum / dn / step;
        }
        case MeasureId::PB: {
            const std::vector<double> erw = rw_errors();
            double wins = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (std::abs(observed[i] - predicted[i]) <= std::abs(erw[i])) wins += 1.0;
            return wins / dn;
        }
        case MeasureId::MAAPE: {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                sum += detail::maape_term(observed[i], predicted[i]);
            return sum / dn;
        }
        case MeasureId::NMSE: {
            if (n < 2) fail(ErrorCode::SeriesTooShort, "NMSE needs at least two weeks");
            const double var = stats::sample_variance(observed);
            if (var == 0.0) fail(ErrorCode::DivisionByZero, "constant observed series");
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = observed[i] - predicted[i];
                sum += e * e;
            }
            return sum / dn / var;
        }
        case MeasureId::APE:
        case MeasureId::sAPE: {
            if (n != 1) fail(ErrorCode::LengthMismatch, "APE/sAPE score a single pair");
            return id == MeasureId::APE
                       ? detail::ape_term(observed[0], predicted[0], opts.epsilon_policy,
                                          detail::min_nonzero(observed))
                       : detail::sape_term(observed[0], predicted[0], opts.epsilon_policy);
        }
    }
    fail(ErrorCode::InvalidConfig, "unknown measure");
}

/// Median measures, split out for callers that only want the robust pair.
inline double median_measure(MeasureId id, std::span<const double> observed,
                             std::span<const double> predicted,
                             const MeasureOptions& opts = {}) {
    if (id != MeasureId::MdAPE && id != MeasureId::MdsAPE)
        fail(ErrorCode::InvalidConfig, "median_measure handles MdAPE and MdsAPE only");
    return compute_measure(id, observed, predicted, opts);
}

/// Per-prediction-time scalar feature errors for one (method, feature) pair.
struct FeatureErrorPoint {
    Week prediction_time = 0;
    double predicted = 0.0;
    double observed = 0.0;
    double error = 0.0;  // observed - predicted
};

struct FeatureErrorSeries {
    std::string method_id;
    FeatureId feature = FeatureId::PeakValue;
    std::vector<FeatureErrorPoint> points;
    /// Prediction times whose run never produced the feature.
    std::vector<Week> gaps;
};

/// Extracts one feature from the epidemic curve a run implies for its
/// season: the observed weeks up to the prediction time followed by the
/// predicted remainder. The season-start denominator (total visits) is
/// borrowed from the observed curve, since methods predict case counts only.
/// Returns nullopt when the feature is not defined on this curve.
inline std::optional<double> predicted_feature_value(const EpiCurve& observed,
                                                     const ForecastRun& run, FeatureId id,
                                                     const FeatureConfig& cfg) {
    std::vector<double> composite;
    for (Week w = observed.start_week; w <= run.prediction_time && w <= observed.last_week();
         ++w)
        composite.push_back(observed.value_at(w));
    for (std::size_t i = 0; i < run.predicted.size(); ++i) {
        if (!observed.contains_week(run.first_predicted_week() + static_cast<Week>(i))) break;
        composite.push_back(run.predicted[i]);
    }
    const WeeklySeries series{observed.start_week, composite};
    try {
        switch (id) {
            case FeatureId::PeakValue:
                return peak(series).value;
            case FeatureId::PeakTime:
                return static_cast<double>(peak(series).week);
            case FeatureId::TakeoffValue: {
                auto t = first_take_off(series, cfg);
                if (!t) return std::nullopt;
                return t->slope;
            }
            case FeatureId::TakeoffTime: {
                auto t = first_take_off(series, cfg);
                if (!t) return std::nullopt;
                return static_cast<double>(t->week);
            }
            case FeatureId::IdLength: {
                if (!cfg.id_threshold) return std::nullopt;
                auto r = intensity_duration(series, *cfg.id_threshold);
                if (!r) return std::nullopt;
                return static_cast<double>(r->length);
            }
            case FeatureId::IdStart: {
                if (!cfg.id_threshold) return std::nullopt;
                auto r = intensity_duration(series, *cfg.id_threshold);
                if (!r) return std::nullopt;
                return static_cast<double>(r->start);
            }
            case FeatureId::SeasonStart: {
                if (!observed.total_visits || !cfg.season_threshold) return std::nullopt;
                std::vector<double> percents(series.size());
                for (std::size_t i = 0; i < series.size(); ++i) {
                    const Week w = series.week_at(i);
                    if (!observed.contains_week(w)) return std::nullopt;
                    const double visits =
                        (*observed.total_visits)[static_cast<std::size_t>(w - observed.start_week)];
                    percents[i] = 100.0 * series[i] / visits;
                }
                auto start = season_start({series.start_week, percents}, *cfg.season_threshold);
                if (!start) return std::nullopt;
                return static_cast<double>(*start);
            }
            case FeatureId::Speed:
                return speed_of_epidemic(series);
        }
    } catch (const Error&) {
        return std::nullopt;
    }
    return std::nullopt;
}

/// Pairs the observed feature value with each run's predicted one, indexed
/// by prediction time. Forecasting mode stops at the week the observed
/// feature occurred; Calibration keeps every prediction time. Runs on which
/// the feature is undefined are recorded as gaps.
inline FeatureErrorSeries feature_error_series(const ForecastSet& set, FeatureId id,
                                               const FeatureConfig& cfg, Mode mode) {
    if (set.empty()) fail(ErrorCode::EmptySeries, "forecast set has no runs");
    const EpiCurve& curve = set.target();
    const FeatureVector observed_fv = extract_all(curve, cfg);
    const std::optional<double> observed_value = feature_value(observed_fv, id);
    if (!observed_value)
        fail(ErrorCode::FeatureAbsent,
             std::string("observed feature not computable: ") + to_string(id));
    const std::optional<Week> occurred = feature_occurrence_week(curve, observed_fv, cfg, id);

    FeatureErrorSeries out;
    out.method_id = set.method_id();
    out.feature = id;
    for (const auto& [k, run] : set.runs()) {
        if (mode == Mode::Forecasting && occurred && k >= *occurred) continue;
        const auto predicted = predicted_feature_value(curve, run, id, cfg);
        if (!predicted) {
            out.gaps.push_back(k);
            continue;
        }
        out.points.push_back({k, *predicted, *observed_value, *observed_value - *predicted});
    }
    return out;
}

/// Collapses a feature-error series into one error-matrix row: the six
/// headline measures over the per-prediction-time pairs. MAPE follows the
/// corrected (epsilon-substituting) form.
inline std::map<MeasureId, double> aggregate_feature_errors(
    const FeatureErrorSeries& series, std::optional<double> observed_value = std::nullopt) {
    if (series.points.empty()) fail(ErrorCode::EmptySeries, "no feature-error points");
    std::vector<double> y;
    std::vector<double> x;
    y.reserve(series.points.size());
    x.reserve(series.points.size());
    for (const auto& p : series.points) {
        y.push_back(observed_value ? *observed_value : p.observed);
        x.push_back(p.predicted);
    }
    std::map<MeasureId, double> out;
    for (MeasureId id : {MeasureId::MAE, MeasureId::RMSE, MeasureId::MAPE, MeasureId::sMAPE,
                         MeasureId::MdAPE, MeasureId::MdsAPE})
        out[id] = compute_measure(id, y, x);
    return out;
}

struct OneStepCurve {
    Week start_week = 0;
    std::vector<double> values;
    WeeklySeries view() const { return {start_week, values}; }
};

/// Stitches each run's first predicted week into a short-term curve:
/// x(k+1) for k = t_b .. t_e, covering weeks t_b+1 .. t_e+1.
inline OneStepCurve one_step_ahead_curve(const ForecastSet& set, Week t_b, Week t_e) {
    if (t_b > t_e) fail(ErrorCode::InvalidRange, "t_b must be <= t_e");
    std::vector<Week> missing;
    OneStepCurve out;
    out.start_week = t_b + 1;
    for (Week k = t_b; k <= t_e; ++k) {
        auto it = set.runs().find(k);
        if (it == set.runs().end() || it->second.predicted.empty()) {
            missing.push_back(k);
            continue;
        }
        out.values.push_back(it->second.predicted.front());
    }
    if (!missing.empty()) {
        std::string msg = "no run at prediction times:";
        for (Week k : missing) msg += " " + std::to_string(k);
        fail(ErrorCode::MissingRun, msg);
    }
    return out;
}

}  // namespace epieval
