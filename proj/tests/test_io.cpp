#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <sstream>

#include "epieval/io.hpp"

using namespace epieval;

TEST_CASE("observed ingestion groups rows into one curve per region-season") {
    std::string text = "region,season,week,ili_count,total_visits,population\n";
    for (int r = 1; r <= 10; ++r)
        for (Week w = 1; w <= 5; ++w)
            text += "hhs-" + std::to_string(r) + ",2013-2014," + std::to_string(w) + "," +
                    std::to_string(10 * w) + ",1000,500000\n";
    std::istringstream in(text);
    const auto curves = parse_observed(in);
    REQUIRE(curves.size() == 10);
    REQUIRE(curves.front().region_id == "hhs-1");
    REQUIRE(curves.front().season_id == "2013-2014");
    REQUIRE(curves.front().length() == 5);
    REQUIRE(curves.front().total_visits.has_value());
    REQUIRE(curves.front().population.value() == 500000);
}

TEST_CASE("header-only observed file yields an empty list") {
    std::istringstream in("region,season,week,ili_count\n");
    REQUIRE(parse_observed(in).empty());
}

TEST_CASE("malformed tokens report their line number") {
    std::istringstream in(
        "region,season,week,ili_count\n"
        "r1,s1,1,10\n"
        "r1,s1,oops,20\n");
    try {
        parse_observed(in);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::ParseError);
        REQUIRE(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("curve validation failures propagate from ingestion") {
    std::istringstream in(
        "region,season,week,ili_count\n"
        "r1,s1,1,10\n"
        "r1,s1,3,20\n");
    try {
        parse_observed(in);
        FAIL("expected NonContiguousWeeks");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::NonContiguousWeeks);
    }
}

namespace {

std::vector<std::shared_ptr<const EpiCurve>> one_target(int t_len = 10) {
    std::vector<std::pair<Week, double>> raw;
    for (Week w = 1; w <= t_len; ++w) raw.emplace_back(w, 100.0 + w);
    return {std::make_shared<const EpiCurve>(validate_curve(raw, "r1", "s1"))};
}

}  // namespace

TEST_CASE("deterministic forecast ingestion builds one set per method") {
    const auto targets = one_target();
    std::string text = "method,region,k,target_week,value\n";
    for (int m = 1; m <= 6; ++m)
        for (Week k = 2; k <= 9; ++k)
            for (Week w = k + 1; w <= 10; ++w)
                text += "m" + std::to_string(m) + ",r1," + std::to_string(k) + "," +
                        std::to_string(w) + ",50\n";
    std::istringstream in(text);
    const ForecastData data = parse_forecasts(in, targets);
    REQUIRE(data.deterministic.size() == 6);
    REQUIRE(data.stochastic.empty());
    for (const auto& set : data.deterministic) {
        REQUIRE(set.runs().size() == 8);
        REQUIRE(set.runs().at(2).predicted.size() == 8);
    }
}

TEST_CASE("rows at or before k become fitted values for calibration") {
    const auto targets = one_target();
    std::string text = "method,region,k,target_week,value\n";
    for (Week w = 1; w <= 4; ++w)
        text += "m1,r1,4," + std::to_string(w) + "," + std::to_string(100 + w) + "\n";
    for (Week w = 5; w <= 10; ++w)
        text += "m1,r1,4," + std::to_string(w) + ",50\n";
    std::istringstream in(text);
    const ForecastData data = parse_forecasts(in, targets);
    const ForecastRun& run = data.deterministic.front().runs().at(4);
    REQUIRE(run.fitted == std::vector<double>{101, 102, 103, 104});
    REQUIRE(run.predicted.size() == 6);
    const AlignedPairs pairs = align(*targets.front(), run, Mode::Calibration);
    REQUIRE(pairs.weeks.size() == 10);
    REQUIRE_FALSE(pairs.degraded_to_forecasting);
}

TEST_CASE("predictions must start right after k") {
    const auto targets = one_target();
    std::istringstream in(
        "method,region,k,target_week,value\n"
        "m1,r1,4,6,50\n"
        "m1,r1,4,7,50\n");
    try {
        parse_forecasts(in, targets);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::ParseError);
    }
}

TEST_CASE("gaps in a run's weeks are rejected") {
    const auto targets = one_target();
    std::istringstream in(
        "method,region,k,target_week,value\n"
        "m1,r1,2,3,50\n"
        "m1,r1,2,5,50\n");
    try {
        parse_forecasts(in, targets);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::ParseError);
    }
}

TEST_CASE("replicate rows become weighted replicate series") {
    const auto targets = one_target();
    std::istringstream in(
        "method,region,k,target_week,value,replicate_id,weight\n"
        "m1,r1,,4,90,1,0.75\n"
        "m1,r1,,4,110,2,0.25\n"
        "m1,r1,,5,95,1,0.75\n"
        "m1,r1,,5,105,2,0.25\n");
    const ForecastData data = parse_forecasts(in, targets);
    REQUIRE(data.deterministic.empty());
    REQUIRE(data.stochastic.size() == 1);
    const StochasticSeries& s = data.stochastic.front();
    REQUIRE(s.start_week == 4);
    REQUIRE(s.length() == 2);
    const auto& reps = std::get<Replicates>(s.per_week.front());
    REQUIRE(reps.samples == std::vector<double>{90.0, 110.0});
    REQUIRE(reps.weights == std::vector<double>{0.75, 0.25});
}

TEST_CASE("moment rows become distribution specs") {
    const auto targets = one_target();
    std::istringstream in(
        "method,region,k,target_week,value,mean,variance,n_samples\n"
        "m1,r1,,4,,100,25,100\n"
        "m1,r1,,5,,110,16,9\n");
    const ForecastData data = parse_forecasts(in, targets);
    REQUIRE(data.stochastic.size() == 1);
    const auto& wide = std::get<DistSpec>(data.stochastic.front().per_week[0]);
    REQUIRE(wide.kind == DistSpec::Kind::Normal);
    REQUIRE_THAT(wide.stdev, Catch::Matchers::WithinRel(0.5, 1e-12));  // 5/sqrt(100)
    const auto& narrow = std::get<DistSpec>(data.stochastic.front().per_week[1]);
    REQUIRE(narrow.kind == DistSpec::Kind::StudentT);  // n < 30
    REQUIRE(narrow.dof == 8.0);
}

TEST_CASE("mixed forecast kinds are rejected") {
    const auto targets = one_target();
    SECTION("within one row") {
        std::istringstream in(
            "method,region,k,target_week,value,mean,variance,n_samples\n"
            "m1,r1,2,3,50,100,25,100\n");
        try {
            parse_forecasts(in, targets);
            FAIL("expected MixedForecastKinds");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::MixedForecastKinds);
        }
    }
    SECTION("across rows of one method") {
        std::istringstream in(
            "method,region,k,target_week,value,replicate_id\n"
            "m1,r1,2,3,50,\n"
            "m1,r1,,4,60,1\n");
        try {
            parse_forecasts(in, targets);
            FAIL("expected MixedForecastKinds");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::MixedForecastKinds);
        }
    }
}

TEST_CASE("unknown regions are reported at their line") {
    const auto targets = one_target();
    std::istringstream in(
        "method,region,k,target_week,value\n"
        "m1,nowhere,2,3,50\n");
    try {
        parse_forecasts(in, targets);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::ParseError);
        REQUIRE(std::string(e.what()).find("nowhere") != std::string::npos);
    }
}

TEST_CASE("config parsing") {
    std::istringstream in(
        "# comment\n"
        "[input]\n"
        "observed = obs.csv\n"
        "forecasts = fc.csv\n"
        "[features]\n"
        "list = peak_value, peak_time, speed\n"
        "takeoff_delta_t = 3\n"
        "takeoff_threshold = 99\n"
        "id_threshold = 500\n"
        "season_threshold = 2.0\n"
        "[measures]\n"
        "list = mae, rmse, mape\n"
        "[run]\n"
        "mode = calibration\n"
        "regions = r1, r2\n"
        "season = 2013-2014\n"
        "k_begin = 3\n"
        "[stochastic]\n"
        "size = 5000\n"
        "seed = 42\n"
        "[output]\n"
        "directory = results\n"
        "formats = csv, json\n");
    const RunConfig cfg = parse_config(in);
    REQUIRE(cfg.observed_path == "obs.csv");
    REQUIRE(cfg.features ==
            std::vector<FeatureId>{FeatureId::PeakValue, FeatureId::PeakTime, FeatureId::Speed});
    REQUIRE(cfg.feature_config.takeoff_delta_t == 3);
    REQUIRE(cfg.feature_config.id_threshold.value() == 500.0);
    REQUIRE(cfg.measures ==
            std::vector<MeasureId>{MeasureId::MAE, MeasureId::RMSE, MeasureId::MAPE});
    REQUIRE(cfg.mode == Mode::Calibration);
    REQUIRE(cfg.regions == std::vector<std::string>{"r1", "r2"});
    REQUIRE(cfg.k_begin.value() == 3);
    REQUIRE(cfg.stochastic_size == 5000);
    REQUIRE(cfg.stochastic_seed.value() == 42);
    REQUIRE(cfg.out_dir == "results");
    REQUIRE(cfg.formats == std::set<std::string>{"csv", "json"});
    REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("config with a harness block needs no input files") {
    std::istringstream in(
        "[harness]\n"
        "regions = 3\n"
        "season_length = 40\n"
        "peak_week = 18\n"
        "peak_height = 1200\n"
        "onset_sharpness = 0.35\n"
        "seed = 7\n"
        "method = exact 1.0 0 1 0\n"
        "method = biased 1.4 1 3 20 5\n"
        "[features]\n"
        "id_threshold = 200\n");
    const RunConfig cfg = parse_config(in);
    REQUIRE(cfg.harness.has_value());
    REQUIRE(cfg.harness->regions == 3);
    REQUIRE(cfg.harness->methods.size() == 2);
    REQUIRE(cfg.harness->methods[0].method_id == "exact");
    REQUIRE(cfg.harness->methods[1].noise_stdev == 20.0);
    REQUIRE(cfg.harness->methods[1].seed == 5);
    REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("config errors") {
    SECTION("unknown key") {
        std::istringstream in("[run]\nbogus = 1\n");
        try {
            parse_config(in);
            FAIL("expected ConfigError");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::ConfigError);
        }
    }
    SECTION("empty measure list fails validation") {
        std::istringstream in("[measures]\nlist =\n[harness]\nmethod = exact 1.0 0 1 0\n");
        const RunConfig cfg = parse_config(in);
        try {
            cfg.validate();
            FAIL("expected ConfigError");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::ConfigError);
        }
    }
    SECTION("per-pair measures cannot be matrix columns") {
        std::istringstream in("[measures]\nlist = ape\n[harness]\nmethod = exact 1.0 0 1 0\n");
        const RunConfig cfg = parse_config(in);
        try {
            cfg.validate();
            FAIL("expected ConfigError");
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::ConfigError);
        }
    }
}
