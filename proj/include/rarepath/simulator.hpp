#pragma once

#include "rarepath/rng.hpp"
#include "rarepath/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace rarepath {

/// Daily boolean timeline, one byte per day.
using Timeline = std::vector<std::uint8_t>;

/// Ground truth and observation stream of one simulated patient. Day 0 is
/// the day the syndrome sets in.
struct Trajectory {
    int syndrome_id = 0;
    bool is_rare = false;
    int horizon_days = 0;
    std::vector<Timeline> presence;  // [symptom][day], includes latent symptoms
    std::vector<Timeline> observed;  // [symptom][day], visible symptoms only
    std::optional<int> first_observed_day;

    bool operator==(const Trajectory&) const = default;
};

/// Observable prefix of a trajectory: every observation made on days < t.
struct ObservationHistory {
    std::vector<std::vector<int>> days_observed;  // per symptom, sorted
    int t = 0;
    std::optional<int> first_observed_day;
};

/// Normal(mu, sigma) left-truncated at 0. Uses plain rejection when the
/// truncation point is below the mean's neighbourhood, and Robert's
/// exponential proposal in the far tail. sigma = 0 returns max(mu, 0).
double sample_truncated_normal(double mu, double sigma, Rng& rng);

/// Symptom onset day: round(x), x ~ Normal(mu, sigma) left-truncated at 0.
int sample_onset_day(double mu, double sigma, Rng& rng);

/// Length of one episode: ceil(Exp(rate)), at least one day.
int sample_episode_days(double rate, Rng& rng);

/// Alternating present/absent episodes starting with a present episode at
/// `onset_day`, false before onset, truncated at `horizon`. An onset at or
/// beyond the horizon yields an all-false timeline.
Timeline sample_recurrent_timeline(int onset_day, double on_rate, double off_rate, int horizon,
                                   Rng& rng);

/// Throws std::out_of_range for an unknown syndrome id.
Trajectory simulate_trajectory(const ScenarioConfig& config, int syndrome_id, Rng& rng);

/// Throws std::out_of_range unless 0 <= t <= horizon.
ObservationHistory history_at(const Trajectory& trajectory, int t);

/// counts[s] trajectories of syndrome s, ordered by syndrome then index.
/// Trajectory i draws from Rng::derive(master_seed, i, Cohort), so output is
/// identical for any thread count.
std::vector<Trajectory> simulate_cohort(const ScenarioConfig& config, std::span<const int> counts,
                                        std::uint64_t master_seed, int threads = 1);

/// Long-format CSV: trajectory_id,syndrome_id,symptom_id,day,present,observed
/// with one row per (trajectory, symptom, day) where the symptom is present.
void write_cohort_csv(const std::vector<Trajectory>& cohort, const std::filesystem::path& path);

/// Rebuilds trajectories from a cohort CSV. Trajectories without any present
/// day have no rows and are therefore absent from the result.
std::vector<Trajectory> read_cohort_csv(const std::filesystem::path& path,
                                        const ScenarioConfig& config);

}  // namespace rarepath
