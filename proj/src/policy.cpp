#include "rarepath/policy.hpp"

#include "rarepath/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rarepath {

std::vector<std::string> validate_cost_params(const CostParams& params) {
    std::vector<std::string> out;
    const auto check = [&](double v, const char* name) {
        if (!(std::isfinite(v) && v >= 0.0)) {
            out.push_back(std::string("cost.") + name + ": must be finite and >= 0");
        }
    };
    check(params.cost_wandering_per_day, "cost_wandering_per_day");
    check(params.cost_specialist, "cost_specialist");
    check(params.cost_non_specialist, "cost_non_specialist");
    check(params.mean_wandering_days, "mean_wandering_days");
    check(params.mean_physicians_consulted, "mean_physicians_consulted");
    return out;
}

namespace {

void check_dimensions(const Trajectory& trajectory, const Forest& forest) {
    const auto expected = feature_count_for(trajectory.observed.size());
    if (forest.feature_count != expected) {
        throw std::invalid_argument("forest expects " + std::to_string(forest.feature_count) +
                                    " features but the trajectory yields " +
                                    std::to_string(expected));
    }
}

PathwayOutcome base_outcome(const Trajectory& trajectory) {
    PathwayOutcome outcome;
    outcome.has_rare_disease = trajectory.is_rare;
    outcome.first_observed_day = trajectory.first_observed_day;
    if (trajectory.first_observed_day) {
        outcome.wandering_days = trajectory.horizon_days - 1 - *trajectory.first_observed_day;
    }
    return outcome;
}

void send(PathwayOutcome& outcome, int day) {
    outcome.sent_to_center = true;
    outcome.decision_day = day;
    outcome.wandering_days = day - *outcome.first_observed_day;
}

}  // namespace

std::vector<double> prediction_series(const Trajectory& trajectory, const Forest& forest) {
    check_dimensions(trajectory, forest);
    std::vector<double> series;
    if (!trajectory.first_observed_day) return series;
    const int first = *trajectory.first_observed_day;
    series.reserve(static_cast<std::size_t>(trajectory.horizon_days - first));
    FeatureStream stream(trajectory);
    for (int day = first; day < trajectory.horizon_days; ++day) {
        series.push_back(predict_proba(forest, stream.advance(day)));
    }
    return series;
}

PathwayOutcome run_alert_policy(const Trajectory& trajectory, const Forest& forest, double tau) {
    check_dimensions(trajectory, forest);
    PathwayOutcome outcome = base_outcome(trajectory);
    if (!trajectory.first_observed_day) return outcome;
    const int first = *trajectory.first_observed_day;
    FeatureStream stream(trajectory);
    for (int day = first; day < trajectory.horizon_days; ++day) {
        if (predict_proba(forest, stream.advance(day)) > tau) {
            send(outcome, day);
            break;
        }
    }
    return outcome;
}

std::vector<PathwayOutcome> run_alert_policy_grid(const Trajectory& trajectory,
                                                  const Forest& forest,
                                                  std::span<const double> taus) {
    if (!std::is_sorted(taus.begin(), taus.end())) {
        throw std::invalid_argument("run_alert_policy_grid: taus must be ascending");
    }
    check_dimensions(trajectory, forest);
    std::vector<PathwayOutcome> outcomes(taus.size(), base_outcome(trajectory));
    if (!trajectory.first_observed_day) return outcomes;
    const int first = *trajectory.first_observed_day;
    FeatureStream stream(trajectory);
    // The first day with p > tau is the first day the running maximum of p
    // exceeds tau, so one pass assigns decision days to ascending taus.
    std::size_t next = 0;
    double running_max = -1.0;
    for (int day = first; day < trajectory.horizon_days && next < taus.size(); ++day) {
        running_max = std::max(running_max, predict_proba(forest, stream.advance(day)));
        while (next < taus.size() && running_max > taus[next]) {
            send(outcomes[next], day);
            ++next;
        }
    }
    return outcomes;
}

double pathway_cost(const PathwayOutcome& outcome, const CostParams& params) {
    const double wandering = static_cast<double>(outcome.wandering_days);
    if (outcome.has_rare_disease) {
        if (outcome.sent_to_center) {
            return params.cost_wandering_per_day * wandering + params.cost_specialist;
        }
        return params.cost_wandering_per_day * params.mean_wandering_days +
               params.cost_non_specialist * params.mean_physicians_consulted;
    }
    if (outcome.sent_to_center) {
        return params.cost_wandering_per_day * wandering + params.cost_specialist;
    }
    return params.cost_wandering_per_day * wandering + params.cost_non_specialist;
}

int sample_syndrome(const ScenarioConfig& config, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    int last_positive = -1;
    for (std::size_t s = 0; s < config.syndromes.size(); ++s) {
        const double p = config.syndromes[s].prevalence;
        if (p <= 0.0) continue;
        last_positive = static_cast<int>(s);
        cumulative += p;
        if (u < cumulative) return last_positive;
    }
    if (last_positive < 0) throw std::invalid_argument("sample_syndrome: all prevalences are 0");
    // Rounding left the cumulative sum just below 1.
    return last_positive;
}

Trajectory simulate_evaluation_trajectory(const ScenarioConfig& config, std::uint64_t seed,
                                          std::uint64_t index) {
    Rng rng = Rng::derive(seed, index, StreamTag::Evaluation);
    const int syndrome = sample_syndrome(config, rng);
    return simulate_trajectory(config, syndrome, rng);
}

CostEstimate estimate_expected_cost(const ScenarioConfig& config, const Forest& forest,
                                    double tau, const CostParams& params, int n_eval,
                                    std::uint64_t seed, int threads) {
    const double grid[] = {tau};
    const auto curve = sweep_thresholds(config, forest, params, grid, n_eval, seed, threads);
    return {curve.mean_costs.front(), curve.std_errs.front()};
}

CostCurve sweep_thresholds(const ScenarioConfig& config, const Forest& forest,
                           const CostParams& params, std::span<const double> grid, int n_eval,
                           std::uint64_t seed, int threads) {
    if (grid.empty()) throw std::invalid_argument("sweep_thresholds: empty grid");
    if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() < 0.0 || grid.back() > 1.0) {
        throw std::invalid_argument("sweep_thresholds: grid must be ascending within [0, 1]");
    }
    if (n_eval < 1) throw std::invalid_argument("sweep_thresholds: n_eval must be >= 1");
    if (auto bad = validate_cost_params(params); !bad.empty()) {
        throw std::invalid_argument(bad.front());
    }

    const std::size_t g = grid.size();
    const auto n = static_cast<std::size_t>(n_eval);
    std::vector<double> costs(n * g);
    parallel_for(n, threads, [&](std::size_t i) {
        const Trajectory traj = simulate_evaluation_trajectory(config, seed, i);
        const auto outcomes = run_alert_policy_grid(traj, forest, grid);
        for (std::size_t j = 0; j < g; ++j) costs[i * g + j] = pathway_cost(outcomes[j], params);
    });

    CostCurve curve;
    curve.taus.assign(grid.begin(), grid.end());
    curve.mean_costs.assign(g, 0.0);
    curve.std_errs.assign(g, 0.0);
    for (std::size_t j = 0; j < g; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += costs[i * g + j];
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = costs[i * g + j] - mean;
            sq += d * d;
        }
        curve.mean_costs[j] = mean;
        curve.std_errs[j] =
            n > 1 ? std::sqrt(sq / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    }
    curve.normalized_costs = normalize_min_max(curve.mean_costs);
    return curve;
}

std::vector<double> normalize_min_max(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
    return out;
}

std::vector<double> uniform_grid(int points) {
    if (points < 1) throw std::invalid_argument("grid needs at least one point");
    if (points == 1) return {0.0};
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
    }
    return grid;
}

double select_optimal_threshold(const CostCurve& curve) {
    if (curve.taus.empty() || curve.taus.size() != curve.mean_costs.size()) {
        throw std::invalid_argument("select_optimal_threshold: empty or inconsistent curve");
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < curve.mean_costs.size(); ++j) {
        const bool tie = curve.mean_costs[j] == curve.mean_costs[best];
        if (curve.mean_costs[j] < curve.mean_costs[best] ||
            (tie && curve.taus[j] < curve.taus[best])) {
            best = j;
        }
    }
    return curve.taus[best];
}

}  // namespace rarepath
