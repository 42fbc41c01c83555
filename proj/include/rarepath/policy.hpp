#pragma once

#include "rarepath/learner.hpp"
#include "rarepath/scenario.hpp"
#include "rarepath/simulator.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rarepath {

/// Constants of the pathway cost. The defaults are placeholders for expert
/// values; they are chosen so that referring a common-syndrome patient costs
/// more than letting them wander, while a rare patient left unreferred costs
/// more than a prompt referral.
struct CostParams {
    double cost_wandering_per_day = 1.0;
    double cost_specialist = 2500.0;
    double cost_non_specialist = 100.0;
    double mean_wandering_days = 730.0;  // two years, the reported national average
    double mean_physicians_consulted = 30.0;

    bool operator==(const CostParams&) const = default;
};

/// Field-path messages for every non-finite or negative field.
std::vector<std::string> validate_cost_params(const CostParams& params);

struct PathwayOutcome {
    bool has_rare_disease = false;  // event E
    bool sent_to_center = false;    // event A
    int wandering_days = 0;
    std::optional<int> decision_day;
    std::optional<int> first_observed_day;

    bool operator==(const PathwayOutcome&) const = default;
};

/// Forest output for each day d in [first_observed_day, horizon), using the
/// observations through day d. Empty when nothing is ever observed.
std::vector<double> prediction_series(const Trajectory& trajectory, const Forest& forest);

/// Threshold policy: from the first observed day on, refer the patient on the
/// first day whose prediction strictly exceeds tau. Unreferred patients wander
/// until the last simulated day. Throws std::invalid_argument on a feature
/// dimension mismatch.
PathwayOutcome run_alert_policy(const Trajectory& trajectory, const Forest& forest, double tau);

/// run_alert_policy for every tau of an ascending grid from one prediction
/// pass.
std::vector<PathwayOutcome> run_alert_policy_grid(const Trajectory& trajectory,
                                                  const Forest& forest,
                                                  std::span<const double> taus);

/// Four-branch cost on the (E, A) cell of the outcome:
///   E  and A     : per_day * wandering + specialist
///   E  and not A : per_day * mean_wandering + non_specialist * mean_physicians
///   not E and A  : per_day * wandering + specialist
///   not E, not A : per_day * wandering + non_specialist
double pathway_cost(const PathwayOutcome& outcome, const CostParams& params);

struct CostEstimate {
    double mean = 0.0;
    double std_err = 0.0;  // 0 when n_eval == 1
};

struct CostCurve {
    std::vector<double> taus;
    std::vector<double> mean_costs;
    std::vector<double> std_errs;
    std::vector<double> normalized_costs;  // all zero for a constant curve
};

/// Draws a syndrome id from the scenario prevalences.
int sample_syndrome(const ScenarioConfig& config, Rng& rng);

/// Evaluation trajectory i: syndrome ~ prevalence, then the trajectory, both
/// from Rng::derive(seed, i, Evaluation). Disjoint from cohort streams.
Trajectory simulate_evaluation_trajectory(const ScenarioConfig& config, std::uint64_t seed,
                                          std::uint64_t index);

/// Monte Carlo mean and standard error of the pathway cost at one threshold.
CostEstimate estimate_expected_cost(const ScenarioConfig& config, const Forest& forest,
                                    double tau, const CostParams& params, int n_eval,
                                    std::uint64_t seed, int threads = 1);

/// Expected cost for every tau of the grid on one shared evaluation cohort.
/// The grid must be non-empty, ascending and inside [0, 1]. The reduction is
/// in trajectory order, so results do not depend on `threads`.
CostCurve sweep_thresholds(const ScenarioConfig& config, const Forest& forest,
                           const CostParams& params, std::span<const double> grid, int n_eval,
                           std::uint64_t seed, int threads = 1);

/// Min-max rescaling to [0, 1]; all zeros when the input is constant.
std::vector<double> normalize_min_max(std::span<const double> values);

/// `points` evenly spaced values from 0 to 1 inclusive (points >= 2), or {0}.
std::vector<double> uniform_grid(int points);

/// Grid value with the smallest mean cost; the smallest tau wins ties.
double select_optimal_threshold(const CostCurve& curve);

}  // namespace rarepath
