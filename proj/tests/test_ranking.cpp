#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "epieval/ranking.hpp"

using namespace epieval;

namespace {

// Frozen six-method fixture: peak-value errors for one region and the
// competition ranks they must produce.
const std::vector<std::string> kMethods{"M1", "M2", "M3", "M4", "M5", "M6"};

ErrorMatrix peak_error_fixture() {
    ErrorMatrix m;
    m.methods = kMethods;
    m.columns = {"mae", "rmse", "mape", "smape", "mdape", "mdsape"};
    m.cells = {
        {4992.0, 9838.6, 4.9, 1.04, 1.7, 1.03},
        {4825.2, 9770.4, 4.7, 0.99, 1.4, 0.95},
        {3263.0, 5146.5, 3.2, 0.96, 1.5, 1.01},
        {2990.7, 4651.3, 2.9, 0.899, 1.1, 0.85},
        {3523.2, 5334.8, 3.4, 0.95, 2.1, 1.01},
        {3310.9, 4948.5, 3.2, 0.896, 1.5, 0.85},
    };
    return m;
}

}  // namespace

TEST_CASE("competition ranking of fixture columns") {
    SECTION("mae column") {
        const std::vector<int> ranks =
            rank_column({4992.0, 4825.2, 3263.0, 2990.7, 3523.2, 3310.9});
        REQUIRE(ranks == std::vector<int>{6, 5, 2, 1, 4, 3});
    }
    SECTION("mdape column shares rank 3 and skips to 5") {
        const std::vector<int> ranks = rank_column({1.7, 1.4, 1.5, 1.1, 2.1, 1.5});
        REQUIRE(ranks == std::vector<int>{5, 2, 3, 1, 6, 3});
    }
    SECTION("mdsape column with two tie groups") {
        const std::vector<int> ranks = rank_column({1.03, 0.95, 1.01, 0.85, 1.01, 0.85});
        REQUIRE(ranks == std::vector<int>{6, 3, 4, 1, 4, 1});
    }
    SECTION("all equal share rank 1") {
        REQUIRE(rank_column({2.0, 2.0, 2.0}) == std::vector<int>{1, 1, 1});
    }
    SECTION("non-finite input rejected") {
        try {
            rank_column({1.0, std::nan("")});
            FAIL("expected NonFiniteValue");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::NonFiniteValue);
        }
    }
}

TEST_CASE("rank matrix over the fixture reproduces the reference rank table") {
    const RankMatrix rm = rank_matrix(peak_error_fixture());
    REQUIRE(rm.ranks[0] == std::vector<int>{6, 6, 6, 6, 5, 6});
    REQUIRE(rm.ranks[1] == std::vector<int>{5, 5, 5, 5, 2, 3});
    REQUIRE(rm.ranks[3] == std::vector<int>{1, 1, 1, 2, 1, 1});
    // the reference mape column breaks the 3.2-vs-3.2 tie with unrounded
    // values; full-precision ranking on the rounded inputs ties them at 2
    REQUIRE(rm.ranks[2][2] == 2);
    REQUIRE(rm.ranks[5][2] == 2);
}

TEST_CASE("consensus over measures is the plain mean of ranks") {
    // reference rank rows, mape column tie broken as in the fixture
    const std::vector<std::vector<int>> rows{
        {6, 6, 6, 6, 5, 6}, {5, 5, 5, 5, 2, 3}, {2, 3, 2, 4, 3, 4},
        {1, 1, 1, 2, 1, 1}, {4, 4, 4, 3, 6, 4}, {3, 2, 3, 1, 3, 1},
    };
    const auto consensus = consensus_over_measures(rows);
    const std::vector<double> expected{35.0 / 6.0, 25.0 / 6.0, 3.0, 7.0 / 6.0, 25.0 / 6.0,
                                       13.0 / 6.0};
    for (std::size_t m = 0; m < expected.size(); ++m)
        REQUIRE_THAT(consensus[m].average, Catch::Matchers::WithinAbs(expected[m], 1e-12));
    // rounded to two decimals these are 5.83, 4.17, 3.00, 1.17, 4.17, 2.17
    REQUIRE_THAT(consensus[0].average, Catch::Matchers::WithinAbs(5.83, 0.005));
    REQUIRE_THAT(consensus[3].average, Catch::Matchers::WithinAbs(1.17, 0.005));

    SECTION("single-column matrix echoes the ranks") {
        const auto single = consensus_over_measures({{3}, {1}, {2}});
        REQUIRE(single[0].average == 3.0);
        REQUIRE(single[1].average == 1.0);
        REQUIRE(single[2].average == 2.0);
    }
}

TEST_CASE("level-2 consensus over features") {
    ErrorMatrix per_feature;
    per_feature.methods = kMethods;
    per_feature.columns = {"peak_value", "peak_time", "takeoff_value", "takeoff_time",
                           "id_length",  "id_start",  "season_start",  "speed"};
    per_feature.cells = {
        {5.83, 3.83, 6.00, 1.0, 3.33, 5.67, 6.0, 5.83},
        {4.17, 4.50, 5.00, 2.0, 1.00, 4.33, 5.0, 4.50},
        {3.00, 2.83, 3.83, 3.0, 3.33, 3.17, 3.0, 3.17},
        {1.17, 3.33, 1.17, 5.0, 4.00, 1.00, 1.0, 1.17},
        {4.17, 1.17, 3.00, 4.0, 4.33, 4.67, 3.0, 4.17},
        {2.17, 2.33, 1.50, 6.0, 4.67, 2.00, 1.0, 1.67},
    };
    const auto level2 = consensus_over_features(per_feature);
    const std::vector<double> expected{4.69, 3.81, 3.17, 2.23, 3.56, 2.67};
    for (std::size_t m = 0; m < expected.size(); ++m)
        REQUIRE_THAT(level2[m].average, Catch::Matchers::WithinAbs(expected[m], 0.01));

    SECTION("identical rows give the common value") {
        ErrorMatrix flat;
        flat.methods = {"a", "b"};
        flat.columns = {"f1", "f2"};
        flat.cells = {{2.5, 2.5}, {1.0, 1.0}};
        const auto c = consensus_over_features(flat);
        REQUIRE(c[0].average == 2.5);
        REQUIRE(c[1].average == 1.0);
    }
}

TEST_CASE("level-3 consensus over regions") {
    ErrorMatrix per_region;
    per_region.methods = kMethods;
    per_region.columns = {"r1", "r2", "r3", "r4", "r5", "r6", "r7", "r8", "r9", "r10"};
    per_region.cells = {
        {4.69, 3.31, 4.60, 3.94, 3.65, 2.21, 4.30, 3.94, 3.46, 4.29},
        {3.81, 2.77, 4.23, 4.00, 3.71, 1.29, 3.73, 3.69, 3.79, 3.96},
        {3.17, 3.46, 1.96, 2.68, 2.67, 2.21, 3.03, 2.73, 2.17, 2.33},
        {2.23, 3.19, 2.04, 2.70, 3.08, 1.29, 2.93, 2.60, 2.44, 3.71},
        {3.56, 1.79, 1.79, 2.41, 2.77, 2.21, 2.67, 3.06, 2.88, 2.67},
        {2.67, 3.23, 2.13, 2.48, 2.83, 1.29, 2.60, 3.27, 3.13, 3.58},
    };
    const auto level3 = consensus_over_regions(per_region);
    const std::vector<double> expected{3.84, 3.50, 2.64, 2.62, 2.58, 2.72};
    for (std::size_t m = 0; m < expected.size(); ++m)
        REQUIRE_THAT(level3[m], Catch::Matchers::WithinAbs(expected[m], 0.01));

    SECTION("single region is the identity") {
        ErrorMatrix one;
        one.methods = {"a", "b"};
        one.columns = {"r1"};
        one.cells = {{1.4}, {2.6}};
        REQUIRE(consensus_over_regions(one) == std::vector<double>{1.4, 2.6});
    }
}

TEST_CASE("rank columns are invariant under monotone transforms") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> dist(0.1, 100.0);
    std::uniform_int_distribution<int> tie(0, 2);
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<double> v(3 + trial % 10);
        for (auto& x : v) x = dist(gen);
        if (tie(gen) == 0 && v.size() > 1) v[0] = v[1];  // force occasional ties
        std::vector<double> scaled(v.size()), squared(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            scaled[i] = 42.0 * v[i];
            squared[i] = v[i] * v[i];
        }
        const auto base = rank_column(v);
        REQUIRE(rank_column(scaled) == base);
        REQUIRE(rank_column(squared) == base);

        // competition-rank sum bound: equality without ties
        int sum = 0;
        for (int r : base) sum += r;
        const int n = static_cast<int>(v.size());
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const bool has_tie = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
        if (has_tie)
            REQUIRE(sum <= n * (n + 1) / 2);
        else
            REQUIRE(sum == n * (n + 1) / 2);
    }
}

namespace {

FeatureErrorSeries series_for(const std::string& method,
                              const std::vector<std::pair<Week, double>>& predictions,
                              double observed) {
    FeatureErrorSeries s;
    s.method_id = method;
    s.feature = FeatureId::PeakValue;
    for (const auto& [k, x] : predictions) s.points.push_back({k, x, observed, observed - x});
    return s;
}

}  // namespace

TEST_CASE("horizon ranking averages APE and sAPE ranks per prediction time") {
    SECTION("an exact method ranks first everywhere") {
        const double y = 100.0;
        const auto exact = series_for("exact", {{2, 100.0}, {3, 100.0}, {4, 100.0}}, y);
        const auto off = series_for("off", {{2, 140.0}, {3, 60.0}, {4, 180.0}}, y);
        const HorizonRanking hr = horizon_ranking({exact, off});
        REQUIRE(hr.prediction_times == std::vector<Week>{2, 3, 4});
        for (double r : hr.average_ranks[0]) REQUIRE(r == 1.0);
        for (double r : hr.average_ranks[1]) REQUIRE(r == 2.0);
    }
    SECTION("opposite APE/sAPE winners both average 1.5") {
        // y=10: under-forecast 6 wins APE (0.4 vs 0.5), over-forecast 15
        // wins sAPE (0.4 vs 0.5)
        const auto under = series_for("under", {{2, 6.0}}, 10.0);
        const auto over = series_for("over", {{2, 15.0}}, 10.0);
        const HorizonRanking hr = horizon_ranking({under, over});
        REQUIRE(hr.average_ranks[0][0] == 1.5);
        REQUIRE(hr.average_ranks[1][0] == 1.5);
    }
    SECTION("methods missing a prediction time are flagged and skipped") {
        const auto full = series_for("full", {{2, 90.0}, {3, 90.0}}, 100.0);
        const auto partial = series_for("partial", {{2, 95.0}}, 100.0);
        const HorizonRanking hr = horizon_ranking({full, partial});
        REQUIRE(hr.excluded == std::vector<std::pair<std::string, Week>>{{"partial", 3}});
        REQUIRE(std::isnan(hr.average_ranks[1][1]));
        REQUIRE(hr.average_ranks[0][1] == 1.0);
    }
    SECTION("matches a brute-force sort on random errors") {
        std::mt19937_64 gen(13);
        std::uniform_real_distribution<double> dist(1.0, 50.0);
        for (int trial = 0; trial < 100; ++trial) {
            const double observed = 100.0;
            std::vector<FeatureErrorSeries> methods;
            std::vector<std::vector<double>> predicted(3, std::vector<double>(5));
            for (int m = 0; m < 3; ++m) {
                std::vector<std::pair<Week, double>> pts;
                for (Week k = 1; k <= 5; ++k) {
                    predicted[m][k - 1] = observed + dist(gen) * (m % 2 == 0 ? 1.0 : -1.0) +
                                          dist(gen);
                    pts.emplace_back(k, predicted[m][k - 1]);
                }
                methods.push_back(series_for("m" + std::to_string(m), pts, observed));
            }
            const HorizonRanking hr = horizon_ranking(methods);
            for (std::size_t ki = 0; ki < hr.prediction_times.size(); ++ki) {
                for (int m = 0; m < 3; ++m) {
                    // brute force: count strictly better methods per measure
                    auto ape = [&](int i) {
                        return std::fabs(observed - predicted[i][ki]) / observed;
                    };
                    auto sape = [&](int i) {
                        return 2.0 * std::fabs(observed - predicted[i][ki]) /
                               (observed + predicted[i][ki]);
                    };
                    int ape_rank = 1, sape_rank = 1;
                    for (int j = 0; j < 3; ++j) {
                        if (ape(j) < ape(m)) ++ape_rank;
                        if (sape(j) < sape(m)) ++sape_rank;
                    }
                    REQUIRE(hr.average_ranks[m][ki] == 0.5 * (ape_rank + sape_rank));
                    REQUIRE(hr.average_ranks[m][ki] >= 1.0);
                    REQUIRE(hr.average_ranks[m][ki] <= 3.0);
                }
            }
        }
    }
    SECTION("no points at all") {
        FeatureErrorSeries empty;
        empty.method_id = "m";
        try {
            horizon_ranking({empty});
            FAIL("expected NoCommonPredictionTimes");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::NoCommonPredictionTimes);
        }
    }
}

TEST_CASE("box-whisker statistics follow the Tukey convention") {
    const auto b = stats::box_stats({10, 12, 13, 14, 15, 16, 18, 100});
    REQUIRE(b.med == 14.5);
    REQUIRE(b.q1 == 12.5);  // median of {10,12,13,14}
    REQUIRE(b.q3 == 17.0);  // median of {15,16,18,100}
    REQUIRE(b.whisker_high == 18.0);  // 100 lies past q3 + 1.5*iqr = 23.75
    REQUIRE(b.whisker_low == 10.0);
    REQUIRE(b.outliers == std::vector<double>{100.0});
}

TEST_CASE("MAPE clustering intervals") {
    const std::map<std::string, double> fixture{{"M1", 0.39}, {"M2", 0.35}, {"M3", 0.25},
                                                {"M4", 0.21}, {"M5", 0.25}, {"M6", 0.21},
                                                {"ARIMA", 0.77}};
    const auto groups = cluster_by_mape(fixture);
    for (const auto& m : {"M1", "M2", "M3", "M4", "M5", "M6"}) REQUIRE(groups.at(m) == 1);
    REQUIRE(groups.at("ARIMA") == 2);

    REQUIRE(cluster_by_mape({{"a", 0.0}}).at("a") == 1);
    REQUIRE(cluster_by_mape({{"a", 0.5}}).at("a") == 1);  // boundary goes to the lower group
    REQUIRE(cluster_by_mape({{"a", 1.0}}).at("a") == 2);
    REQUIRE(cluster_by_mape({{"a", 1.5}}).at("a") == 3);
    REQUIRE(cluster_by_mape({{"a", 2.5}}).at("a") == 4);
    try {
        cluster_by_mape({{"a", -0.1}});
        FAIL("expected NegativeMape");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::NegativeMape);
    }
}
