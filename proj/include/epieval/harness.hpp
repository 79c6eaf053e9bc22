#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "epieval/curve.hpp"
#include "epieval/errors.hpp"
#include "epieval/stochastic.hpp"

namespace epieval {

/// Parameters of a synthetic epidemic-shaped curve: a logistic-style bump
/// (sech^2 profile, the weekly-new-cases shape of logistic cumulative
/// growth) with optional additive noise truncated at zero.
struct SynthConfig {
    int season_length = 52;
    Week peak_week = 20;
    double peak_height = 1000.0;
    double onset_sharpness = 0.3;
    double noise_stdev = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (season_length < 3) fail(ErrorCode::InvalidConfig, "season length must be >= 3");
        if (peak_week <= 1 || peak_week >= season_length)
            fail(ErrorCode::InvalidConfig, "peak week must satisfy 1 < peak < T");
        if (peak_height <= 0.0) fail(ErrorCode::InvalidConfig, "peak height must be > 0");
        if (onset_sharpness <= 0.0) fail(ErrorCode::InvalidConfig, "onset sharpness must be > 0");
        if (noise_stdev < 0.0) fail(ErrorCode::InvalidConfig, "noise stdev must be >= 0");
    }
};

/// A cheap, controllable forecaster imitation: the truth gets scaled,
/// time-shifted, smoothed and jittered. The identity settings (bias 1,
/// shift 0, window 1, noise 0) reproduce the truth exactly.
struct PerturbConfig {
    std::string method_id;
    double amplitude_bias = 1.0;
    int phase_shift = 0;
    int smoothing_window = 1;
    double noise_stdev = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (amplitude_bias <= 0.0) fail(ErrorCode::InvalidConfig, "amplitude bias must be > 0");
        if (smoothing_window < 1) fail(ErrorCode::InvalidConfig, "smoothing window must be >= 1");
        if (noise_stdev < 0.0) fail(ErrorCode::InvalidConfig, "noise stdev must be >= 0");
    }

    bool is_identity() const {
        return amplitude_bias == 1.0 && phase_shift == 0 && smoothing_window == 1 &&
               noise_stdev == 0.0;
    }
};

/// Deterministic per seed. With zero noise the curve is exactly unimodal
/// with value peak_height at peak_week.
inline EpiCurve generate_curve(const SynthConfig& cfg, std::string region_id = "synthetic",
                               std::string season_id = "season-1") {
    cfg.validate();
    EpiCurve curve;
    curve.region_id = std::move(region_id);
    curve.season_id = std::move(season_id);
    curve.start_week = 1;
    curve.counts.resize(static_cast<std::size_t>(cfg.season_length));
    std::mt19937_64 gen(cfg.seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_stdev > 0.0 ? cfg.noise_stdev : 1.0);
    for (int t = 1; t <= cfg.season_length; ++t) {
        const double z = cfg.onset_sharpness * static_cast<double>(t - cfg.peak_week);
        const double sech = 1.0 / std::cosh(z);
        double value = cfg.peak_height * sech * sech;
        if (cfg.noise_stdev > 0.0) value += noise(gen);
        curve.counts[static_cast<std::size_t>(t - 1)] = std::max(0.0, value);
    }
    return curve;
}

namespace detail {

/// Scale + shift + box smoothing of the truth, with edge weeks clamped.
inline double perturbed_value(const EpiCurve& truth, const PerturbConfig& cfg, Week week) {
    const Week shifted = week - cfg.phase_shift;
    const int half = (cfg.smoothing_window - 1) / 2;
    double sum = 0.0;
    int n = 0;
    for (int d = -half; d <= cfg.smoothing_window - 1 - half; ++d) {
        Week w = shifted + d;
        w = std::clamp(w, truth.start_week, truth.last_week());
        sum += truth.value_at(w);
        ++n;
    }
    return cfg.amplitude_bias * (sum / n);
}

}  // namespace detail

/// Long-term runs over weeks k+1..T for every prediction time in
/// [k_first, k_last], for each configured method. Noise is drawn from a
/// sub-seed per (method, k), so families are reproducible bit-exactly.
inline std::vector<ForecastSet> generate_forecast_family(std::shared_ptr<const EpiCurve> truth,
                                                         const std::vector<PerturbConfig>& methods,
                                                         Week k_first, Week k_last) {
    if (!truth) fail(ErrorCode::InvalidConfig, "no truth curve");
    if (k_first < truth->start_week + 1 || k_last >= truth->last_week() || k_first > k_last)
        fail(ErrorCode::InvalidRange, "prediction times must lie within the season interior");
    std::vector<ForecastSet> out;
    out.reserve(methods.size());
    for (const PerturbConfig& cfg : methods) {
        cfg.validate();
        ForecastSet set(cfg.method_id, truth);
        for (Week k = k_first; k <= k_last; ++k) {
            std::mt19937_64 gen(derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
            std::normal_distribution<double> noise(0.0, cfg.noise_stdev > 0.0 ? cfg.noise_stdev : 1.0);
            std::vector<double> predicted;
            predicted.reserve(static_cast<std::size_t>(truth->last_week() - k));
            for (Week w = k + 1; w <= truth->last_week(); ++w) {
                double value = detail::perturbed_value(*truth, cfg, w);
                if (cfg.noise_stdev > 0.0) value += noise(gen);
                predicted.push_back(std::max(0.0, value));
            }
            set.add_run(make_forecast_run(cfg.method_id, k, std::move(predicted)));
        }
        out.push_back(std::move(set));
    }
    return out;
}

}  // namespace epieval
