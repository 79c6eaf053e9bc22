#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "epieval/curve.hpp"
#include "epieval/errors.hpp"
#include "epieval/measures.hpp"
#include "epieval/series.hpp"

namespace epieval {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Independent sub-stream seed for (stream, index), so per-week sampling
/// tasks give identical results whether run serially or in parallel.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    return detail::splitmix64(seed ^ detail::splitmix64(stream * 0x9E3779B97F4A7C15ull + index));
}

/// A seeded bootstrap draw from a distribution spec.
struct SampleSet {
    std::vector<double> samples;
    DistSpec source;
    std::uint64_t seed = 0;
    std::size_t size = 0;
};

/// Density of the spec at a point. Only parametric specs with positive
/// spread have an evaluable density.
inline double pdf(const DistSpec& spec, double x) {
    switch (spec.kind) {
        case DistSpec::Kind::Normal: {
            if (spec.stdev <= 0.0)
                fail(ErrorCode::InvalidSpec, "point mass has no evaluable density");
            const double z = (x - spec.mean) / spec.stdev;
            return std::exp(-0.5 * z * z) / (spec.stdev * std::sqrt(2.0 * std::numbers::pi));
        }
        case DistSpec::Kind::StudentT: {
            if (spec.scale <= 0.0)
                fail(ErrorCode::InvalidSpec, "degenerate student-t has no evaluable density");
            const double v = spec.dof;
            const double z = (x - spec.mean) / spec.scale;
            const double log_norm = std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                                    0.5 * std::log(v * std::numbers::pi) - std::log(spec.scale);
            return std::exp(log_norm - 0.5 * (v + 1.0) * std::log1p(z * z / v));
        }
        case DistSpec::Kind::Empirical:
            fail(ErrorCode::InvalidSpec, "empirical spec has no evaluable density");
    }
    fail(ErrorCode::InvalidSpec, "unknown spec kind");
}

/// Bootstrap sampling from a spec: Normal and Student-t are drawn directly,
/// Empirical is resampled with replacement honoring weights. Deterministic
/// for a given (spec, seed, size).
inline SampleSet sample_pdf(const DistSpec& spec, std::size_t size, std::uint64_t seed) {
    spec.validate();
    if (size < 1) fail(ErrorCode::InvalidRange, "sample size must be >= 1");
    SampleSet out;
    out.source = spec;
    out.seed = seed;
    out.size = size;
    out.samples.resize(size);
    std::mt19937_64 gen(seed);
    switch (spec.kind) {
        case DistSpec::Kind::Normal: {
            if (spec.stdev == 0.0) {
                std::fill(out.samples.begin(), out.samples.end(), spec.mean);
                break;
            }
            std::normal_distribution<double> dist(spec.mean, spec.stdev);
            for (auto& s : out.samples) s = dist(gen);
            break;
        }
        case DistSpec::Kind::StudentT: {
            if (spec.scale == 0.0) {
                std::fill(out.samples.begin(), out.samples.end(), spec.mean);
                break;
            }
            std::student_t_distribution<double> dist(spec.dof);
            for (auto& s : out.samples) s = spec.mean + spec.scale * dist(gen);
            break;
        }
        case DistSpec::Kind::Empirical: {
            if (spec.weights.empty()) {
                std::uniform_int_distribution<std::size_t> dist(0, spec.samples.size() - 1);
                for (auto& s : out.samples) s = spec.samples[dist(gen)];
            } else {
                std::discrete_distribution<std::size_t> dist(spec.weights.begin(),
                                                             spec.weights.end());
                for (auto& s : out.samples) s = spec.samples[dist(gen)];
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Replicate-based measures (per-week aggregation across series)
// ---------------------------------------------------------------------------

/// Weeks-by-series grid of replicate predictions, optionally weighted per
/// series (weights positive, summing to 1).
struct ReplicateMatrix {
    Week start_week = 1;
    std::vector<std::vector<double>> values;  // [week][series]
    std::optional<std::vector<double>> weights;

    std::size_t weeks() const { return values.size(); }
    std::size_t series() const { return values.empty() ? 0 : values.front().size(); }

    void validate() const {
        if (values.empty() || values.front().empty())
            fail(ErrorCode::EmptyMatrix, "replicate matrix has no cells");
        for (const auto& row : values)
            if (row.size() != values.front().size())
                fail(ErrorCode::LengthMismatch, "replicate matrix is not rectangular");
        if (weights) {
            if (weights->size() != series())
                fail(ErrorCode::LengthMismatch, "weights length differs from series count");
            double sum = 0.0;
            for (double w : *weights) {
                if (w <= 0.0) fail(ErrorCode::InvalidSpec, "weights must be positive");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                fail(ErrorCode::InvalidSpec, "weights must sum to 1");
        }
    }
};

/// Per-week aggregates of simple errors across replicate series. Weighted
/// variants replace the uniform mean/median with the weighted one.
enum class ReplicateMeasureId { MAPE_t, MdAPE_t, sMAPE_t, GMRAE_t, MdRAE_t, RMSE_t, PB_t };

inline const char* to_string(ReplicateMeasureId id) {
    switch (id) {
        case ReplicateMeasureId::MAPE_t: return "mape_t";
        case ReplicateMeasureId::MdAPE_t: return "mdape_t";
        case ReplicateMeasureId::sMAPE_t: return "smape_t";
        case ReplicateMeasureId::GMRAE_t: return "gmrae_t";
        case ReplicateMeasureId::MdRAE_t: return "mdrae_t";
        case ReplicateMeasureId::RMSE_t: return "rmse_t";
        case ReplicateMeasureId::PB_t: return "pb_t";
    }
    return "unknown";
}

/// One week's aggregate across replicate series s = 1..S. `rw_error` is the
/// scalar random-walk error for the week, required by the RAE family and PB.
/// GMRAE collapses to 0 when any single replicate is exact; that case sets
/// `*degenerate_zero` instead of erroring.
inline double replicate_measure(ReplicateMeasureId id, double observed,
                                std::span<const double> replicates, double rw_error = 0.0,
                                std::span<const double> weights = {},
                                bool* degenerate_zero = nullptr) {
    if (replicates.empty()) fail(ErrorCode::EmptySeries, "no replicates");
    std::vector<double> w(weights.begin(), weights.end());
    if (w.empty()) w.assign(replicates.size(), 1.0);
    if (w.size() != replicates.size())
        fail(ErrorCode::LengthMismatch, "weights length differs from replicate count");
    if (degenerate_zero) *degenerate_zero = false;

    auto abs_errors = [&]() {
        std::vector<double> es(replicates.size());
        for (std::size_t s = 0; s < replicates.size(); ++s)
            es[s] = std::abs(observed - replicates[s]);
        return es;
    };

    switch (id) {
        case ReplicateMeasureId::MAPE_t:
        case ReplicateMeasureId::MdAPE_t: {
            if (observed == 0.0) fail(ErrorCode::DivisionByZero, "observed value is zero");
            std::vector<double> apes = abs_errors();
            for (auto& e : apes) e /= std::abs(observed);
            return id == ReplicateMeasureId::MAPE_t ? stats::weighted_mean(apes, w)
                                                    : stats::weighted_median(apes, w);
        }
        case ReplicateMeasureId::sMAPE_t: {
            std::vector<double> sapes(replicates.size());
            for (std::size_t s = 0; s < replicates.size(); ++s)
                sapes[s] = detail::sape_term(observed, replicates[s], EpsilonPolicy::Corrected);
            return stats::weighted_mean(sapes, w);
        }
        case ReplicateMeasureId::GMRAE_t:
        case ReplicateMeasureId::MdRAE_t: {
            if (rw_error == 0.0) fail(ErrorCode::ZeroRwError, "random-walk error is zero");
            std::vector<double> raes = abs_errors();
            for (auto& e : raes) e /= std::abs(rw_error);
            if (id == ReplicateMeasureId::MdRAE_t) return stats::weighted_median(raes, w);
            for (double r : raes) {
                if (r == 0.0) {
                    if (degenerate_zero) *degenerate_zero = true;
                    return 0.0;
                }
            }
            double wsum = 0.0;
            double log_sum = 0.0;
            for (std::size_t s = 0; s < raes.size(); ++s) {
                log_sum += w[s] * std::log(raes[s]);
                wsum += w[s];
            }
            return std::exp(log_sum / wsum);
        }
        case ReplicateMeasureId::RMSE_t: {
            std::vector<double> ses(replicates.size());
            for (std::size_t s = 0; s < replicates.size(); ++s) {
                const double e = observed - replicates[s];
                ses[s] = e * e;
            }
            return std::sqrt(stats::weighted_mean(ses, w));
        }
        case ReplicateMeasureId::PB_t: {
            std::vector<double> wins(replicates.size());
            for (std::size_t s = 0; s < replicates.size(); ++s)
                wins[s] = std::abs(observed - replicates[s]) <= std::abs(rw_error) ? 1.0 : 0.0;
            return stats::weighted_mean(wins, w);
        }
    }
    fail(ErrorCode::InvalidConfig, "unknown replicate measure");
}

/// Ratio of one series' cumulative absolute error to the random walk's.
inline double cum_rae(std::span<const double> observed, std::span<const double> predicted,
                      std::span<const double> rw_forecast) {
    detail::check_paired(observed, predicted);
    if (rw_forecast.size() != observed.size())
        fail(ErrorCode::LengthMismatch, "rw series length differs");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t < observed.size(); ++t) {
        num += std::abs(observed[t] - predicted[t]);
        den += std::abs(observed[t] - rw_forecast[t]);
    }
    if (den == 0.0) fail(ErrorCode::ZeroRwCumulative, "random walk has zero cumulative error");
    return num / den;
}

enum class CumulativeAggregate { GMCumRAE, MdCumRAE };

/// Aggregates per-series CumRAE values across the replicate matrix by
/// geometric mean or median. A zero CumRAE makes the geometric mean collapse
/// to 0; that is reported via `degenerate_zero`, mirroring GMRAE.
inline double cumulative_relative(CumulativeAggregate id, std::span<const double> observed,
                                  const ReplicateMatrix& replicates,
                                  std::span<const double> rw_forecast,
                                  bool* degenerate_zero = nullptr) {
    replicates.validate();
    if (replicates.weeks() != observed.size())
        fail(ErrorCode::LengthMismatch, "replicate weeks differ from observed length");
    if (degenerate_zero) *degenerate_zero = false;
    std::vector<double> values(replicates.series());
    std::vector<double> column(replicates.weeks());
    for (std::size_t s = 0; s < replicates.series(); ++s) {
        for (std::size_t t = 0; t < replicates.weeks(); ++t) column[t] = replicates.values[t][s];
        values[s] = cum_rae(observed, column, rw_forecast);
    }
    if (id == CumulativeAggregate::MdCumRAE) return stats::median(values);
    for (double v : values) {
        if (v == 0.0) {
            if (degenerate_zero) *degenerate_zero = true;
            return 0.0;
        }
    }
    return stats::geometric_mean(values);
}

// ---------------------------------------------------------------------------
// Distances between probability densities
// ---------------------------------------------------------------------------

enum class DistanceKind { Bhattacharyya, Hellinger, Jaccard };

inline const char* to_string(DistanceKind kind) {
    switch (kind) {
        case DistanceKind::Bhattacharyya: return "bhattacharyya";
        case DistanceKind::Hellinger: return "hellinger";
        case DistanceKind::Jaccard: return "jaccard";
    }
    return "unknown";
}

struct ClosedFormNormal {};
struct Sampled {
    std::size_t size = 10000;
    std::uint64_t seed = 0;
};
using DistanceMethod = std::variant<ClosedFormNormal, Sampled>;

namespace detail {

inline void require_normal(const DistSpec& s) {
    if (s.kind != DistSpec::Kind::Normal || s.stdev <= 0.0)
        fail(ErrorCode::ClosedFormUnavailable, "closed form needs non-degenerate normals");
}

/// Bhattacharyya coefficient of two normals.
inline double normal_bc(const DistSpec& p, const DistSpec& q) {
    const double vp = p.stdev * p.stdev;
    const double vq = q.stdev * q.stdev;
    const double dm = p.mean - q.mean;
    return std::sqrt(2.0 * p.stdev * q.stdev / (vp + vq)) * std::exp(-dm * dm / (4.0 * (vp + vq)));
}

}  // namespace detail

/// Distance between two predictive densities. The closed forms hold for
/// normal pairs; the sampled route pools bootstrap draws from both specs
/// (S = S_x u S_y) and evaluates both densities at every pooled point.
/// Bhattacharyya and Hellinger use the mixture-weighted estimate of the
/// overlap integral, which is exact when the two specs coincide.
inline double pdf_distance(DistanceKind kind, const DistSpec& p, const DistSpec& q,
                           const DistanceMethod& method = ClosedFormNormal{}) {
    if (std::holds_alternative<ClosedFormNormal>(method)) {
        detail::require_normal(p);
        detail::require_normal(q);
        switch (kind) {
            case DistanceKind::Bhattacharyya: {
                const double vp = p.stdev * p.stdev;
                const double vq = q.stdev * q.stdev;
                const double dm = p.mean - q.mean;
                return 0.25 * std::log(0.25 * (vp / vq + vq / vp + 2.0)) +
                       0.25 * dm * dm / (vp + vq);
            }
            case DistanceKind::Hellinger:
                return std::sqrt(2.0 * (1.0 - detail::normal_bc(p, q)));
            case DistanceKind::Jaccard:
                fail(ErrorCode::ClosedFormUnavailable, "no closed form for Jaccard");
        }
    }
    const Sampled& opts = std::get<Sampled>(method);
    const SampleSet sx = sample_pdf(p, opts.size, derive_seed(opts.seed, 1));
    const SampleSet sy = sample_pdf(q, opts.size, derive_seed(opts.seed, 2));
    std::vector<double> pooled;
    pooled.reserve(sx.samples.size() + sy.samples.size());
    pooled.insert(pooled.end(), sx.samples.begin(), sx.samples.end());
    pooled.insert(pooled.end(), sy.samples.begin(), sy.samples.end());

    if (kind == DistanceKind::Jaccard) {
        double fg = 0.0;
        double ff = 0.0;
        double gg = 0.0;
        for (double s : pooled) {
            const double f = pdf(p, s);
            const double g = pdf(q, s);
            fg += f * g;
            ff += f * f;
            gg += g * g;
        }
        const double denom = ff + gg - fg;
        if (denom == 0.0)
            fail(ErrorCode::ZeroDenominator, "both densities vanish on all samples");
        return 1.0 - fg / denom;
    }

    // overlap integral Int sqrt(fg) dx estimated under the pooled mixture
    double bc = 0.0;
    for (double s : pooled) {
        const double f = pdf(p, s);
        const double g = pdf(q, s);
        const double mix = 0.5 * (f + g);
        if (mix > 0.0) bc += std::sqrt(f * g) / mix;
    }
    bc /= static_cast<double>(pooled.size());
    if (bc <= 0.0) fail(ErrorCode::ZeroDenominator, "densities do not overlap on any sample");
    bc = std::min(bc, 1.0);
    return kind == DistanceKind::Bhattacharyya ? -std::log(bc) : std::sqrt(2.0 * (1.0 - bc));
}

// ---------------------------------------------------------------------------
// Error-measure estimation for distribution-valued forecasts
// ---------------------------------------------------------------------------

/// Estimated headline measures for a stochastic forecast: totals across
/// weeks plus the per-week values used for horizon ranking.
struct StochasticMeasures {
    std::map<MeasureId, double> totals;
    std::map<MeasureId, std::vector<double>> per_week;
};

namespace detail {

struct WeekKernels {
    double mae = 0.0;
    double mse = 0.0;
    double mape = 0.0;
    double smape = 0.0;
    double mdape = 0.0;
    double mdsape = 0.0;
};

/// Expected per-sample error terms for one week, given paired draws
/// (observed may be a constant point). The percentage kernels substitute
/// `eps` for zero observed values, matching the corrected MAPE.
inline WeekKernels week_kernels(std::span<const double> obs, std::span<const double> pred,
                                std::optional<double> eps) {
    WeekKernels k;
    const std::size_t n = pred.size();
    std::vector<double> apes(n);
    std::vector<double> sapes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = obs[i];
        const double x = pred[i];
        const double e = std::abs(y - x);
        k.mae += e;
        k.mse += e * e;
        apes[i] = ape_term(y, x, EpsilonPolicy::Corrected, eps);
        sapes[i] = sape_term(y, x, EpsilonPolicy::Corrected);
        k.mape += apes[i];
        k.smape += sapes[i];
    }
    const double dn = static_cast<double>(n);
    k.mae /= dn;
    k.mse /= dn;
    k.mape /= dn;
    k.smape /= dn;
    k.mdape = stats::median(std::move(apes));
    k.mdsape = stats::median(std::move(sapes));
    return k;
}

inline StochasticMeasures reduce_weeks(const std::vector<WeekKernels>& weeks) {
    StochasticMeasures out;
    const double dn = static_cast<double>(weeks.size());
    std::vector<double> mdapes;
    std::vector<double> mdsapes;
    double mae = 0.0;
    double mse = 0.0;
    double mape = 0.0;
    double smape = 0.0;
    for (const auto& k : weeks) {
        mae += k.mae;
        mse += k.mse;
        mape += k.mape;
        smape += k.smape;
        mdapes.push_back(k.mdape);
        mdsapes.push_back(k.mdsape);
        out.per_week[MeasureId::MAE].push_back(k.mae);
        out.per_week[MeasureId::RMSE].push_back(std::sqrt(k.mse));
        out.per_week[MeasureId::MAPE].push_back(k.mape);
        out.per_week[MeasureId::sMAPE].push_back(k.smape);
        out.per_week[MeasureId::MdAPE].push_back(k.mdape);
        out.per_week[MeasureId::MdsAPE].push_back(k.mdsape);
    }
    out.totals[MeasureId::MAE] = mae / dn;
    out.totals[MeasureId::RMSE] = std::sqrt(mse / dn);
    out.totals[MeasureId::MAPE] = mape / dn;
    out.totals[MeasureId::sMAPE] = smape / dn;
    out.totals[MeasureId::MdAPE] = stats::median(std::move(mdapes));
    out.totals[MeasureId::MdsAPE] = stats::median(std::move(mdsapes));
    return out;
}

}  // namespace detail

/// Case A: deterministic observation, stochastic forecast. Each week draws a
/// bootstrap sample from the predicted spec and averages the per-sample
/// error terms (median for the Md variants); weekly values then reduce
/// across weeks the same way the deterministic measures do, so point-mass
/// specs reproduce them exactly.
inline StochasticMeasures measures_vs_point(const std::vector<DistSpec>& predicted,
                                            std::span<const double> observed,
                                            std::size_t size = 10000, std::uint64_t seed = 0) {
    if (predicted.size() != observed.size())
        fail(ErrorCode::LengthMismatch, "spec series length differs from observed");
    if (predicted.empty()) fail(ErrorCode::EmptySeries, "empty forecast series");
    const auto eps = detail::min_nonzero(observed);
    std::vector<detail::WeekKernels> weeks(predicted.size());
    for (std::size_t t = 0; t < predicted.size(); ++t) {
        const SampleSet sx = sample_pdf(predicted[t], size, derive_seed(seed, t, 0));
        const std::vector<double> ys(sx.samples.size(), observed[t]);
        weeks[t] = detail::week_kernels(ys, sx.samples, eps);
    }
    return detail::reduce_weeks(weeks);
}

/// Case B-b: stochastic observation and forecast. Draws equal-size sample
/// sets from both specs each week and estimates the expected error term over
/// independently paired samples. The zero-observation epsilon is the
/// smallest non-zero draw across all observed weeks.
inline StochasticMeasures measures_between_pdfs(const std::vector<DistSpec>& predicted,
                                                const std::vector<DistSpec>& observed,
                                                std::size_t size = 10000,
                                                std::uint64_t seed = 0) {
    if (predicted.size() != observed.size())
        fail(ErrorCode::LengthMismatch, "spec series lengths differ");
    if (predicted.empty()) fail(ErrorCode::EmptySeries, "empty forecast series");
    std::vector<SampleSet> obs_draws(observed.size());
    std::optional<double> eps;
    for (std::size_t t = 0; t < observed.size(); ++t) {
        obs_draws[t] = sample_pdf(observed[t], size, derive_seed(seed, t, 1));
        for (double y : obs_draws[t].samples)
            if (y != 0.0 && (!eps || std::abs(y) < *eps)) eps = std::abs(y);
    }
    std::vector<detail::WeekKernels> weeks(predicted.size());
    for (std::size_t t = 0; t < predicted.size(); ++t) {
        const SampleSet sx = sample_pdf(predicted[t], size, derive_seed(seed, t, 0));
        weeks[t] = detail::week_kernels(obs_draws[t].samples, sx.samples, eps);
    }
    return detail::reduce_weeks(weeks);
}

}  // namespace epieval
