#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "epieval/errors.hpp"

namespace epieval {

/// 1-based surveillance week number.
using Week = int;

/// Non-owning view of consecutive weekly values starting at `start_week`.
/// Week numbering is absolute: element i belongs to week start_week + i.
struct WeeklySeries {
    Week start_week = 1;
    std::span<const double> values;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    Week week_at(std::size_t i) const { return start_week + static_cast<Week>(i); }
    Week last_week() const { return start_week + static_cast<Week>(values.size()) - 1; }
    double operator[](std::size_t i) const { return values[i]; }
};

namespace stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) fail(ErrorCode::EmptySeries, "mean of empty series");
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

/// Unbiased sample variance (n-1 denominator).
inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) fail(ErrorCode::SeriesTooShort, "variance needs at least two points");
    const double m = mean(xs);
    double sum = 0.0;
    for (double x : xs) sum += (x - m) * (x - m);
    return sum / static_cast<double>(xs.size() - 1);
}

inline double sample_stdev(std::span<const double> xs) {
    if (xs.size() == 1) return 0.0;
    return std::sqrt(sample_variance(xs));
}

/// Midpoint-average median: for even n the two middle order statistics are averaged.
inline double median(std::vector<double> xs) {
    if (xs.empty()) fail(ErrorCode::EmptySeries, "median of empty series");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline double median(std::span<const double> xs) {
    return median(std::vector<double>(xs.begin(), xs.end()));
}

inline bool all_equal(std::span<const double> ws) {
    for (double w : ws)
        if (w != ws.front()) return false;
    return true;
}

/// Weighted arithmetic mean. Uniform weights take the unweighted path so the
/// two forms agree exactly, not just to rounding.
inline double weighted_mean(std::span<const double> xs, std::span<const double> ws) {
    if (xs.size() != ws.size()) fail(ErrorCode::LengthMismatch, "weights length mismatch");
    if (ws.empty() || all_equal(ws)) return mean(xs);
    double sum = 0.0;
    double wsum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sum += ws[i] * xs[i];
        wsum += ws[i];
    }
    return sum / wsum;
}

/// Weighted median: smallest value whose cumulative weight reaches half the
/// total; when the cut lands exactly on the boundary the two straddling
/// values are averaged. Uniform weights reduce to the plain median.
inline double weighted_median(std::span<const double> xs, std::span<const double> ws) {
    if (xs.size() != ws.size()) fail(ErrorCode::LengthMismatch, "weights length mismatch");
    if (xs.empty()) fail(ErrorCode::EmptySeries, "median of empty series");
    if (all_equal(ws)) return median(xs);
    std::vector<std::size_t> idx(xs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    double total = 0.0;
    for (double w : ws) total += w;
    const double half = 0.5 * total;
    double cum = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        cum += ws[idx[j]];
        if (cum > half) return xs[idx[j]];
        if (cum == half) {
            // boundary: average with the next distinct-position value
            if (j + 1 < idx.size()) return 0.5 * (xs[idx[j]] + xs[idx[j + 1]]);
            return xs[idx[j]];
        }
    }
    return xs[idx.back()];
}

inline double geometric_mean(std::span<const double> xs) {
    if (xs.empty()) fail(ErrorCode::EmptySeries, "geometric mean of empty series");
    double log_sum = 0.0;
    for (double x : xs) {
        if (x == 0.0) return 0.0;
        log_sum += std::log(std::abs(x));
    }
    return std::exp(log_sum / static_cast<double>(xs.size()));
}

/// Tukey box-whisker summary: midpoint-median quartiles, whiskers at the most
/// extreme data within 1.5*IQR of the box, points beyond them as outliers.
struct BoxStats {
    double q1 = 0.0;
    double med = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    double mean_value = 0.0;
    std::vector<double> outliers;
};

inline BoxStats box_stats(std::vector<double> xs) {
    if (xs.empty()) fail(ErrorCode::EmptySeries, "box stats of empty set");
    std::sort(xs.begin(), xs.end());
    BoxStats b;
    b.mean_value = mean(xs);
    b.med = median(xs);
    const std::size_t n = xs.size();
    // median-exclusive halves (odd n drops the middle point)
    const std::size_t half = n / 2;
    std::vector<double> lower(xs.begin(), xs.begin() + half);
    std::vector<double> upper(xs.end() - half, xs.end());
    b.q1 = lower.empty() ? b.med : median(lower);
    b.q3 = upper.empty() ? b.med : median(upper);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_low = b.q3;
    b.whisker_high = b.q1;
    bool any_in = false;
    for (double x : xs) {
        if (x >= lo_fence && x <= hi_fence) {
            if (!any_in) {
                b.whisker_low = b.whisker_high = x;
                any_in = true;
            } else {
                b.whisker_low = std::min(b.whisker_low, x);
                b.whisker_high = std::max(b.whisker_high, x);
            }
        } else {
            b.outliers.push_back(x);
        }
    }
    return b;
}

}  // namespace stats
}  // namespace epieval
