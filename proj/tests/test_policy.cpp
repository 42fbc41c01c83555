#include "rarepath/policy.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace rarepath;

namespace {

const CostParams kExampleCosts{10.0, 1000.0, 50.0, 730.0, 5.0};

PathwayOutcome outcome(bool rare, bool sent, int wandering) {
    PathwayOutcome o;
    o.has_rare_disease = rare;
    o.sent_to_center = sent;
    o.wandering_days = wandering;
    return o;
}

Forest small_forest(const ScenarioConfig& config, std::uint64_t seed) {
    const std::vector<int> counts{20, 40, 40, 40};
    const auto set = build_training_set(simulate_cohort(config, counts, seed), 30);
    return train_forest(set, {20, 8, 5, 0}, seed);
}

}  // namespace

TEST_CASE("pathway cost branches") {
    CHECK(pathway_cost(outcome(true, true, 30), kExampleCosts) == 1300.0);
    CHECK(pathway_cost(outcome(true, false, 30), kExampleCosts) == 7550.0);
    CHECK(pathway_cost(outcome(true, false, 400), kExampleCosts) == 7550.0);
    CHECK(pathway_cost(outcome(false, false, 0), kExampleCosts) == 50.0);
    CHECK(pathway_cost(outcome(false, true, 30), kExampleCosts) == 1300.0);
    CHECK(pathway_cost(outcome(false, false, 100), kExampleCosts) == 1050.0);
    CHECK(validate_cost_params(kExampleCosts).empty());
    CostParams bad = kExampleCosts;
    bad.cost_specialist = -1.0;
    const auto v = validate_cost_params(bad);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("cost_specialist") != std::string::npos);
}

TEST_CASE("alert policy on a hand-made forest") {
    // ever_observed[7] > 0.5 lifts the output from 0.2 to 0.9.
    const auto forest = testing::stump_forest(feature_count_for(10), 7, 0.5, 0.2, 0.9);
    const auto t = testing::make_trajectory(10, 100, {{2, 5}, {7, 40}});

    const auto sent = run_alert_policy(t, forest, 0.5);
    CHECK(sent.sent_to_center);
    CHECK(sent.decision_day == 40);
    CHECK(sent.wandering_days == 35);
    CHECK(sent.first_observed_day == 5);
    CHECK(pathway_cost(sent, kExampleCosts) == 1350.0);

    const auto at_once = run_alert_policy(t, forest, 0.1);
    CHECK(at_once.decision_day == 5);
    CHECK(at_once.wandering_days == 0);

    const auto never = run_alert_policy(t, forest, 0.9);
    CHECK_FALSE(never.sent_to_center);
    CHECK_FALSE(never.decision_day.has_value());
    CHECK(never.wandering_days == 100 - 1 - 5);

    const auto series = prediction_series(t, forest);
    REQUIRE(series.size() == 95);
    CHECK(series[34] == 0.2);
    CHECK(series[35] == 0.9);
}

TEST_CASE("patients without observations are never referred") {
    const auto forest = testing::stump_forest(feature_count_for(10), 0, 0.5, 0.9, 0.9);
    const auto t = testing::make_trajectory(10, 100, {}, true);
    const auto o = run_alert_policy(t, forest, 0.0);
    CHECK_FALSE(o.sent_to_center);
    CHECK(o.wandering_days == 0);
    CHECK(o.has_rare_disease);
    CHECK(prediction_series(t, forest).empty());
}

TEST_CASE("tau = 1 never refers") {
    const auto config = paper_scenario(42);
    const auto forest = small_forest(config, 42);
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto t = simulate_evaluation_trajectory(config, 7, i);
        CHECK_FALSE(run_alert_policy(t, forest, 1.0).sent_to_center);
    }
}

TEST_CASE("grid policy matches per-threshold runs and is monotone") {
    const auto config = paper_scenario(42);
    const auto forest = small_forest(config, 42);
    const auto grid = uniform_grid(21);
    for (std::uint64_t i = 0; i < 150; ++i) {
        const auto t = simulate_evaluation_trajectory(config, 3, i);
        const auto outcomes = run_alert_policy_grid(t, forest, grid);
        REQUIRE(outcomes.size() == grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            CHECK(outcomes[j] == run_alert_policy(t, forest, grid[j]));
            if (j == 0) continue;
            if (outcomes[j].sent_to_center) {
                REQUIRE(outcomes[j - 1].sent_to_center);
                CHECK(*outcomes[j - 1].decision_day <= *outcomes[j].decision_day);
            }
        }
    }
    const double descending[] = {0.6, 0.3};
    const auto t = simulate_evaluation_trajectory(config, 3, 0);
    CHECK_THROWS_AS(run_alert_policy_grid(t, forest, descending), std::invalid_argument);
}

TEST_CASE("policy rejects a forest of the wrong width") {
    const auto forest = testing::stump_forest(5, 0, 0.5, 0.1, 0.9);
    const auto t = testing::make_trajectory(10, 50, {{1, 3}});
    CHECK_THROWS_AS(run_alert_policy(t, forest, 0.5), std::invalid_argument);
}

TEST_CASE("Monte Carlo estimate matches exact enumeration") {
    // Every link has sigma 0, so the only randomness is the syndrome and
    // which links occur.
    auto config = testing::tiny_scenario();
    config.links[2].occur_prob = 0.7;
    config.links[3].occur_prob = 0.5;
    const auto forest = testing::stump_forest(feature_count_for(2), 1, 0.5, 0.3, 0.8);
    for (double tau : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        const double exact = oracle::enumerate_expected_cost(config, forest, tau, kExampleCosts);
        const auto est = estimate_expected_cost(config, forest, tau, kExampleCosts, 20000, 17);
        CHECK(std::abs(est.mean - exact) <= 3.0 * est.std_err + 1e-9);
    }
}

TEST_CASE("never-refer cost matches the first-observation law") {
    auto config = paper_scenario(42);
    for (auto& s : config.syndromes) s.prevalence = s.id == 2 ? 1.0 : 0.0;
    const auto forest = small_forest(paper_scenario(42), 1);
    const double expected = oracle::no_send_expected_cost(config, 2, CostParams{});
    const auto est = estimate_expected_cost(config, forest, 1.0, CostParams{}, 4000, 5);
    CHECK(std::abs(est.mean - expected) <= 3.0 * est.std_err);
}

TEST_CASE("sweep") {
    const auto config = paper_scenario(42);
    const auto forest = small_forest(config, 42);
    const auto grid = uniform_grid(11);
    const auto curve = sweep_thresholds(config, forest, CostParams{}, grid, 300, 9, 1);
    CHECK(curve.taus == grid);
    REQUIRE(curve.mean_costs.size() == 11);
    CHECK(*std::min_element(curve.normalized_costs.begin(), curve.normalized_costs.end()) == 0.0);
    CHECK(*std::max_element(curve.normalized_costs.begin(), curve.normalized_costs.end()) == 1.0);

    const auto threaded = sweep_thresholds(config, forest, CostParams{}, grid, 300, 9, 4);
    CHECK(threaded.mean_costs == curve.mean_costs);
    CHECK(threaded.std_errs == curve.std_errs);

    for (std::size_t j : {0u, 4u, 10u}) {
        const auto one = estimate_expected_cost(config, forest, grid[j], CostParams{}, 300, 9);
        CHECK(one.mean == curve.mean_costs[j]);
        CHECK(one.std_err == curve.std_errs[j]);
    }
    CHECK(estimate_expected_cost(config, forest, 0.5, CostParams{}, 1, 9).std_err == 0.0);

    const double bad_grid[] = {0.5, 0.2};
    CHECK_THROWS_AS(sweep_thresholds(config, forest, CostParams{}, bad_grid, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(sweep_thresholds(config, forest, CostParams{}, grid, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("grid, normalization and argmin") {
    const auto grid = uniform_grid(101);
    REQUIRE(grid.size() == 101);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);
    CHECK(grid[50] == 0.5);
    CHECK(uniform_grid(1) == std::vector<double>{0.0});
    CHECK_THROWS_AS(uniform_grid(0), std::invalid_argument);

    const double flat[] = {3.0, 3.0, 3.0};
    CHECK(normalize_min_max(flat) == std::vector<double>{0.0, 0.0, 0.0});
    const double values[] = {2.0, 4.0, 3.0};
    CHECK(normalize_min_max(values) == std::vector<double>{0.0, 1.0, 0.5});

    CostCurve curve;
    curve.taus = {0.0, 0.3, 0.6, 1.0};
    curve.mean_costs = {5.0, 2.0, 2.0, 4.0};
    CHECK(select_optimal_threshold(curve) == 0.3);
    curve.taus = {0.6, 0.3};
    curve.mean_costs = {2.0, 2.0};
    CHECK(select_optimal_threshold(curve) == 0.3);
    curve.taus = {0.42};
    curve.mean_costs = {7.0};
    CHECK(select_optimal_threshold(curve) == 0.42);
    CHECK_THROWS_AS(select_optimal_threshold(CostCurve{}), std::invalid_argument);
}

TEST_CASE("syndrome sampling follows the prevalences") {
    auto config = paper_scenario(1);
    config.syndromes[0].prevalence = 0.1;
    config.syndromes[1].prevalence = 0.2;
    config.syndromes[2].prevalence = 0.0;
    config.syndromes[3].prevalence = 0.7;
    std::vector<int> counts(4, 0);
    const int n = 50000;
    Rng rng = Rng::derive(3, 0, StreamTag::Synthetic);
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_syndrome(config, rng))];
    CHECK(counts[2] == 0);
    for (std::size_t s : {0u, 1u, 3u}) {
        const double p = config.syndromes[s].prevalence;
        CHECK(std::abs(counts[s] / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
    }
}
