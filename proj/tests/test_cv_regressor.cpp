#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "evtwin/cross_validation.hpp"
#include "evtwin/regressor.hpp"
#include "evtwin/rng.hpp"

using namespace evtwin;

namespace {

struct Synthetic {
    Matrix X;
    std::vector<double> y;
};

Synthetic linear_problem(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    Synthetic s;
    s.X.assign(n, std::vector<double>(4));
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : s.X[i]) v = rng.uniform(0.0, 10.0);
        s.y.push_back(5.0 * s.X[i][0] - 2.0 * s.X[i][3] + rng.uniform(-0.5, 0.5));
    }
    return s;
}

}  // namespace

TEST_CASE("leave-one-out cv produces one report per row") {
    auto prob = linear_problem(1, 5);
    LearnerConfig cfg;
    cfg.kind = LearnerKind::random_forest;
    cfg.params = {{"n_trees", 5}, {"min_samples_leaf", 1}};
    auto res = kfold_cv(prob.X, prob.y, 5, cfg, false, 9);
    CHECK(res.fold_reports.size() == 5);
}

TEST_CASE("cv fold assignment and aggregate are deterministic per seed") {
    auto prob = linear_problem(2, 60);
    LearnerConfig cfg;
    cfg.kind = LearnerKind::gradient_boosted;
    cfg.params = {{"n_iterations", 15}, {"min_samples_leaf", 2}};
    auto a = kfold_cv(prob.X, prob.y, 5, cfg, true, 7);
    auto b = kfold_cv(prob.X, prob.y, 5, cfg, true, 7);
    REQUIRE(a.fold_reports.size() == b.fold_reports.size());
    for (std::size_t f = 0; f < a.fold_reports.size(); ++f) {
        CHECK(a.fold_reports[f].rmse_pct == b.fold_reports[f].rmse_pct);
        CHECK(a.fold_reports[f].mae_pct == b.fold_reports[f].mae_pct);
    }
    CHECK(a.aggregate.rmse_pct == b.aggregate.rmse_pct);

    auto c = kfold_cv(prob.X, prob.y, 5, cfg, true, 8);
    CHECK(a.aggregate.rmse_pct != c.aggregate.rmse_pct);
}

TEST_CASE("cv aggregate is the mean of fold metrics") {
    auto prob = linear_problem(3, 40);
    LearnerConfig cfg;
    cfg.kind = LearnerKind::random_forest;
    cfg.params = {{"n_trees", 10}};
    auto res = kfold_cv(prob.X, prob.y, 4, cfg, false, 1);
    double mean_mae = 0.0;
    for (const auto& f : res.fold_reports) mean_mae += f.mae_pct;
    mean_mae /= 4.0;
    CHECK_THAT(res.aggregate.mae_pct, Catch::Matchers::WithinRel(mean_mae, 1e-12));
}

TEST_CASE("cv rejects bad fold counts") {
    auto prob = linear_problem(4, 6);
    LearnerConfig cfg;
    CHECK_THROWS_AS(kfold_cv(prob.X, prob.y, 1, cfg, false, 0), std::invalid_argument);
    CHECK_THROWS_AS(kfold_cv(prob.X, prob.y, 7, cfg, false, 0), std::invalid_argument);
}

TEST_CASE("model artifacts round-trip with bit-identical predictions") {
    auto prob = linear_problem(5, 120);
    Rng probe_rng(55);
    Matrix probes(100, std::vector<double>(4));
    for (auto& row : probes)
        for (auto& v : row) v = probe_rng.uniform(-5.0, 15.0);

    auto check_roundtrip = [&](const Regressor& m) {
        nlohmann::json doc = serialize_model(m);
        // through text, as it would travel over the wire
        Regressor back = deserialize_model(nlohmann::json::parse(doc.dump()));
        for (const auto& row : probes) CHECK(back.predict_row(row) == m.predict_row(row));
        CHECK(back.version == m.version);
        CHECK(back.trained_at_soh == m.trained_at_soh);
        CHECK(back.seed == m.seed);
        CHECK(serialize_model(back) == doc);
    };

    SECTION("random forest") {
        LearnerConfig cfg;
        cfg.kind = LearnerKind::random_forest;
        cfg.params = {{"n_trees", 8}};
        Regressor m = train_regressor(cfg, prob.X, prob.y, false, 42);
        m.trained_at_soh = "100";
        m.version = 3;
        check_roundtrip(m);
    }
    SECTION("gradient boosted with scaler") {
        LearnerConfig cfg;
        cfg.kind = LearnerKind::gradient_boosted;
        cfg.params = {{"n_iterations", 12}, {"min_samples_leaf", 2}};
        Regressor m = train_regressor(cfg, prob.X, prob.y, true, 42);
        m.trained_at_soh = "87.5";
        m.version = 9;
        check_roundtrip(m);
    }
    SECTION("mlp") {
        LearnerConfig cfg;
        cfg.kind = LearnerKind::mlp;
        cfg.params = {{"hidden_layers", 2}, {"hidden_width", 6}, {"epochs", 10}};
        Regressor m = train_regressor(cfg, prob.X, prob.y, true, 42);
        check_roundtrip(m);
    }
}

TEST_CASE("deserialize_model rejects corrupted documents") {
    auto prob = linear_problem(6, 30);
    LearnerConfig cfg;
    cfg.kind = LearnerKind::random_forest;
    cfg.params = {{"n_trees", 3}};
    nlohmann::json doc = serialize_model(train_regressor(cfg, prob.X, prob.y, false, 1));

    SECTION("truncated text never parses silently") {
        std::string text = doc.dump();
        text.resize(text.size() / 2);
        CHECK_THROWS(nlohmann::json::parse(text));
    }
    SECTION("schema version mismatch") {
        nlohmann::json bad = doc;
        bad["schema_version"] = 999;
        CHECK_THROWS_WITH(deserialize_model(bad),
                          Catch::Matchers::ContainsSubstring("schema_version"));
    }
    SECTION("missing field") {
        nlohmann::json bad = doc;
        bad.erase("payload");
        CHECK_THROWS_WITH(deserialize_model(bad), Catch::Matchers::ContainsSubstring("payload"));
    }
    SECTION("out-of-range tree child index") {
        nlohmann::json bad = doc;
        bad["payload"]["trees"][0][0]["left"] = 100000;
        CHECK_THROWS_WITH(deserialize_model(bad),
                          Catch::Matchers::ContainsSubstring("child index"));
    }
    SECTION("unknown kind") {
        nlohmann::json bad = doc;
        bad["kind"] = "svm";
        CHECK_THROWS(deserialize_model(bad));
    }
}

TEST_CASE("learner config rejects unknown hyperparameters") {
    auto prob = linear_problem(7, 20);
    LearnerConfig cfg;
    cfg.kind = LearnerKind::random_forest;
    cfg.params = {{"n_treez", 8}};
    CHECK_THROWS_WITH(train_regressor(cfg, prob.X, prob.y, false, 0),
                      Catch::Matchers::ContainsSubstring("n_treez"));
}

TEST_CASE("evaluate applies the embedded scaler and fills inference time") {
    auto prob = linear_problem(8, 80);
    LearnerConfig cfg;
    cfg.kind = LearnerKind::gradient_boosted;
    cfg.params = {{"n_iterations", 25}, {"min_samples_leaf", 2}};
    Regressor m = train_regressor(cfg, prob.X, prob.y, true, 4);
    EvalReport r = evaluate(m, prob.X, prob.y);
    CHECK(r.mae_pct < 5.0);  // in-sample fit on a smooth target
    CHECK(r.rmse_pct >= r.mae_pct - 1e-12);
    CHECK(r.infer_time_s >= 0.0);
}
