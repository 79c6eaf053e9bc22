#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "epieval/errors.hpp"
#include "epieval/measures.hpp"
#include "epieval/series.hpp"

namespace epieval {

/// Methods-by-columns score grid, lower is better. Columns are measure
/// names at level 1, feature names at level 2, region ids at level 3.
struct ErrorMatrix {
    std::vector<std::string> methods;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> cells;

    void validate() const {
        if (methods.empty() || columns.empty() || cells.empty())
            fail(ErrorCode::EmptyMatrix, "error matrix has no cells");
        if (cells.size() != methods.size())
            fail(ErrorCode::LengthMismatch, "row count differs from method count");
        for (const auto& row : cells) {
            if (row.size() != columns.size())
                fail(ErrorCode::LengthMismatch, "matrix is not rectangular");
            for (double v : row)
                if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "non-finite cell");
        }
    }
};

/// Competition ranks ("1224": ties share the minimal rank, the next distinct
/// value skips past them) with per-method consensus summaries.
struct RankMatrix {
    std::vector<std::string> methods;
    std::vector<std::string> columns;
    std::vector<std::vector<int>> ranks;  // methods x columns
    std::vector<double> consensus;        // mean rank across columns
    std::vector<double> median_rank;      // midpoint-average median across columns
};

/// Competition ranking of one column: rank = 1 + number of strictly better
/// entries, so tied values share a rank and the following one skips.
inline std::vector<int> rank_column(const std::vector<double>& values,
                                    bool lower_is_better = true) {
    if (values.empty()) fail(ErrorCode::EmptyMatrix, "empty rank column");
    for (double v : values)
        if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "non-finite rank input");
    std::vector<int> ranks(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        int better = 0;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (lower_is_better ? values[j] < values[i] : values[j] > values[i]) ++better;
        }
        ranks[i] = better + 1;
    }
    return ranks;
}

struct ConsensusRow {
    double average = 0.0;
    double median = 0.0;
};

/// Per-method consensus across measure columns: the plain mean of the
/// method's ranks, plus the midpoint-average median.
inline std::vector<ConsensusRow> consensus_over_measures(
    const std::vector<std::vector<int>>& rank_rows) {
    if (rank_rows.empty() || rank_rows.front().empty())
        fail(ErrorCode::EmptyMatrix, "no rank columns");
    std::vector<ConsensusRow> out;
    out.reserve(rank_rows.size());
    for (const auto& row : rank_rows) {
        if (row.size() != rank_rows.front().size())
            fail(ErrorCode::LengthMismatch, "rank matrix is not rectangular");
        std::vector<double> values(row.begin(), row.end());
        out.push_back({stats::mean(values), stats::median(values)});
    }
    return out;
}

/// Ranks every column of an error matrix and attaches the consensus columns.
inline RankMatrix rank_matrix(const ErrorMatrix& errors) {
    errors.validate();
    RankMatrix out;
    out.methods = errors.methods;
    out.columns = errors.columns;
    out.ranks.assign(errors.methods.size(), std::vector<int>(errors.columns.size(), 0));
    for (std::size_t c = 0; c < errors.columns.size(); ++c) {
        std::vector<double> column(errors.methods.size());
        for (std::size_t m = 0; m < errors.methods.size(); ++m) column[m] = errors.cells[m][c];
        const std::vector<int> ranks = rank_column(column);
        for (std::size_t m = 0; m < errors.methods.size(); ++m) out.ranks[m][c] = ranks[m];
    }
    const auto consensus = consensus_over_measures(out.ranks);
    for (const auto& row : consensus) {
        out.consensus.push_back(row.average);
        out.median_rank.push_back(row.median);
    }
    return out;
}

/// Second-level consensus: row-wise mean and median of per-feature consensus
/// values (methods x features, real-valued).
inline std::vector<ConsensusRow> consensus_over_features(const ErrorMatrix& per_feature) {
    per_feature.validate();
    std::vector<ConsensusRow> out;
    out.reserve(per_feature.methods.size());
    for (const auto& row : per_feature.cells)
        out.push_back({stats::mean(row), stats::median(row)});
    return out;
}

/// Third-level consensus: row-wise mean of per-region consensus values.
inline std::vector<double> consensus_over_regions(const ErrorMatrix& per_region) {
    per_region.validate();
    std::vector<double> out;
    out.reserve(per_region.methods.size());
    for (const auto& row : per_region.cells) out.push_back(stats::mean(row));
    return out;
}

/// Per-prediction-time method ranking, averaged over APE and sAPE. Methods
/// without a point at some k are excluded there and flagged; their cell is
/// NaN in the output grid.
struct HorizonRanking {
    std::vector<Week> prediction_times;
    std::vector<std::string> methods;
    /// methods x prediction_times; NaN marks an excluded (method, k) cell.
    std::vector<std::vector<double>> average_ranks;
    std::vector<std::pair<std::string, Week>> excluded;
};

inline HorizonRanking horizon_ranking(const std::vector<FeatureErrorSeries>& per_method) {
    if (per_method.empty()) fail(ErrorCode::NoCommonPredictionTimes, "no methods");
    std::map<Week, std::vector<std::size_t>> participants;
    for (std::size_t m = 0; m < per_method.size(); ++m)
        for (const auto& p : per_method[m].points)
            participants[p.prediction_time].push_back(m);
    if (participants.empty())
        fail(ErrorCode::NoCommonPredictionTimes, "no prediction times with any method");

    HorizonRanking out;
    for (const auto& [k, ms] : participants) out.prediction_times.push_back(k);
    for (const auto& s : per_method) out.methods.push_back(s.method_id);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.average_ranks.assign(per_method.size(),
                             std::vector<double>(out.prediction_times.size(), nan));

    auto point_at = [&](std::size_t m, Week k) -> const FeatureErrorPoint* {
        for (const auto& p : per_method[m].points)
            if (p.prediction_time == k) return &p;
        return nullptr;
    };

    for (std::size_t ki = 0; ki < out.prediction_times.size(); ++ki) {
        const Week k = out.prediction_times[ki];
        std::vector<std::size_t> ms;
        std::vector<double> ape_values;
        std::vector<double> sape_values;
        for (std::size_t m = 0; m < per_method.size(); ++m) {
            const FeatureErrorPoint* p = point_at(m, k);
            if (!p) {
                out.excluded.emplace_back(per_method[m].method_id, k);
                continue;
            }
            ms.push_back(m);
            // observed value is shared across methods at a given k, so a zero
            // denominator keeps the ordering if we fall back to |e|
            ape_values.push_back(p->observed != 0.0 ? std::abs(p->error / p->observed)
                                                    : std::abs(p->error));
            const double denom = p->observed + p->predicted;
            sape_values.push_back(denom != 0.0 ? 2.0 * std::abs(p->error) / std::abs(denom) : 0.0);
        }
        const std::vector<int> ape_ranks = rank_column(ape_values);
        const std::vector<int> sape_ranks = rank_column(sape_values);
        for (std::size_t i = 0; i < ms.size(); ++i)
            out.average_ranks[ms[i]][ki] = 0.5 * (ape_ranks[i] + sape_ranks[i]);
    }
    return out;
}

/// MAPE-interval clusters for one-step-ahead curves: group 1 is [0, 0.5],
/// group 2 (0.5, 1], group 3 (1, 2], group 4 above 2. Exact boundaries fall
/// into the lower (better) group.
inline std::map<std::string, int> cluster_by_mape(const std::map<std::string, double>& mape) {
    std::map<std::string, int> out;
    for (const auto& [method, value] : mape) {
        if (value < 0.0) fail(ErrorCode::NegativeMape, method);
        int group = 4;
        if (value <= 0.5)
            group = 1;
        else if (value <= 1.0)
            group = 2;
        else if (value <= 2.0)
            group = 3;
        out[method] = group;
    }
    return out;
}

}  // namespace epieval
