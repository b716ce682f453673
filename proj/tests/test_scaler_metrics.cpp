#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "evtwin/features.hpp"
#include "evtwin/metrics.hpp"
#include "evtwin/rng.hpp"

using namespace evtwin;

TEST_CASE("min-max scaler fit records per-feature ranges") {
    Matrix rows = {{3.0, 1.0}, {4.2, 1.0}, {3.6, 1.0}};
    auto s = MinMaxScaler::fit(rows);
    CHECK(s.mins() == std::vector<double>{3.0, 1.0});
    CHECK(s.maxs() == std::vector<double>{4.2, 1.0});

    SECTION("midpoint maps to 0.5") {
        auto out = s.transform(std::vector<double>{3.6, 1.0});
        CHECK_THAT(out[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
    }
    SECTION("min maps to 0, max to 1") {
        CHECK(s.transform(std::vector<double>{3.0, 1.0})[0] == 0.0);
        CHECK(s.transform(std::vector<double>{4.2, 1.0})[0] == 1.0);
    }
    SECTION("constant feature maps to 0") {
        CHECK(s.transform(std::vector<double>{3.6, 1.0})[1] == 0.0);
        CHECK(s.transform(std::vector<double>{3.6, 55.0})[1] == 0.0);
    }
    SECTION("out-of-range inputs are not clamped") {
        double range = 4.2 - 3.0;
        auto out = s.transform(std::vector<double>{4.2 + 0.2 * range, 1.0});
        CHECK_THAT(out[0], Catch::Matchers::WithinAbs(1.2, 1e-12));
        CHECK(s.transform(std::vector<double>{2.4, 1.0})[0] < 0.0);
    }
}

TEST_CASE("scaler on a single row records min == max") {
    auto s = MinMaxScaler::fit({{3.3, -1.0, 25.0, 10.0}});
    CHECK(s.mins() == s.maxs());
    auto out = s.transform(std::vector<double>{3.3, -1.0, 25.0, 10.0});
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("scaler errors") {
    CHECK_THROWS_AS(MinMaxScaler::fit({}), std::invalid_argument);
    MinMaxScaler unfitted;
    CHECK_THROWS_AS(unfitted.transform(std::vector<double>{1.0}), std::logic_error);
    auto s = MinMaxScaler::fit({{1.0, 2.0}});
    CHECK_THROWS_AS(s.transform(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("scaler identity passes values through and survives json") {
    auto id = MinMaxScaler::identity(3);
    std::vector<double> row = {4.2, -0.5, 37.0};
    CHECK(id.transform(row) == row);
    auto back = MinMaxScaler::from_json(id.to_json());
    CHECK(back.transform(row) == row);
}

TEST_CASE("compute_metrics matches hand arithmetic") {
    SECTION("perfect predictions") {
        auto r = compute_metrics({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
        CHECK(r.rmse_pct == 0.0);
        CHECK(r.mse_pct2 == 0.0);
        CHECK(r.mae_pct == 0.0);
        CHECK(r.max_err_pct == 0.0);
    }
    SECTION("errors of 1 and 2") {
        auto r = compute_metrics({1.0, 2.0}, {2.0, 4.0});
        CHECK_THAT(r.mae_pct, Catch::Matchers::WithinAbs(1.5, 1e-12));
        CHECK_THAT(r.mse_pct2, Catch::Matchers::WithinAbs(2.5, 1e-12));
        CHECK_THAT(r.rmse_pct, Catch::Matchers::WithinAbs(std::sqrt(2.5), 1e-12));
        CHECK(r.max_err_pct == 2.0);
    }
    SECTION("errors") {
        CHECK_THROWS_AS(compute_metrics({}, {}), std::invalid_argument);
        CHECK_THROWS_AS(compute_metrics({1.0}, {1.0, 2.0}), std::invalid_argument);
    }
}

TEST_CASE("metric invariants hold on random report batches") {
    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> pred, truth;
        std::size_t n = 1 + rng.bounded(40);
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(rng.uniform(-50.0, 150.0));
            truth.push_back(rng.uniform(0.0, 100.0));
        }
        auto r = compute_metrics(pred, truth);
        CHECK(r.rmse_pct >= r.mae_pct - 1e-12);
        CHECK(r.max_err_pct >= r.mae_pct - 1e-12);
        CHECK(r.rmse_pct >= 0.0);
        CHECK_THAT(r.rmse_pct * r.rmse_pct, Catch::Matchers::WithinRel(r.mse_pct2, 1e-9));
    }
}

TEST_CASE("eval report json round-trip") {
    EvalReport r;
    r.rmse_pct = 1.773;
    r.mse_pct2 = r.rmse_pct * r.rmse_pct;
    r.mae_pct = 0.603;
    r.max_err_pct = 5.5;
    r.train_time_s = 13.704;
    r.infer_time_s = 0.47;
    auto back = EvalReport::from_json(r.to_json());
    CHECK(back.rmse_pct == r.rmse_pct);
    CHECK(back.mae_pct == r.mae_pct);
    CHECK(back.max_err_pct == r.max_err_pct);
    CHECK(back.train_time_s == r.train_time_s);
}
