#include "rarepath/simulator.hpp"

#include "rarepath/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rarepath {

double sample_truncated_normal(double mu, double sigma, Rng& rng) {
    if (sigma <= 0.0) return std::max(mu, 0.0);
    const double lower = -mu / sigma;  // standardized truncation point
    double z = 0.0;
    if (lower < 0.45) {
        // Acceptance probability >= 1 - Phi(0.45) ~ 0.33.
        do {
            z = rng.normal();
        } while (z < lower);
    } else {
        // Robert (1995): translated exponential proposal with optimal rate.
        const double alpha = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
        for (;;) {
            z = lower + rng.exponential(alpha);
            const double d = z - alpha;
            if (rng.uniform() <= std::exp(-0.5 * d * d)) break;
        }
    }
    return std::max(mu + sigma * z, 0.0);
}

int sample_onset_day(double mu, double sigma, Rng& rng) {
    const double x = sample_truncated_normal(mu, sigma, rng);
    const double capped = std::min(std::round(x), 1.0e9);
    return static_cast<int>(capped);
}

int sample_episode_days(double rate, Rng& rng) {
    const double days = std::ceil(rng.exponential(rate));
    return static_cast<int>(std::clamp(days, 1.0, 1.0e9));
}

Timeline sample_recurrent_timeline(int onset_day, double on_rate, double off_rate, int horizon,
                                   Rng& rng) {
    Timeline timeline(static_cast<std::size_t>(std::max(horizon, 0)), 0);
    bool present = true;
    long long day = std::max(onset_day, 0);
    while (day < horizon) {
        const int length = sample_episode_days(present ? on_rate : off_rate, rng);
        const long long end = std::min<long long>(day + length, horizon);
        if (present) {
            std::fill(timeline.begin() + day, timeline.begin() + end, std::uint8_t{1});
        }
        day = end;
        present = !present;
    }
    return timeline;
}

Trajectory simulate_trajectory(const ScenarioConfig& config, int syndrome_id, Rng& rng) {
    if (syndrome_id < 0 || syndrome_id >= static_cast<int>(config.syndromes.size())) {
        throw std::out_of_range("simulate_trajectory: unknown syndrome id " +
                                std::to_string(syndrome_id));
    }
    const int horizon = config.horizon_days;
    const auto n_symptoms = config.symptoms.size();

    Trajectory traj;
    traj.syndrome_id = syndrome_id;
    traj.is_rare = config.syndromes[static_cast<std::size_t>(syndrome_id)].is_rare;
    traj.horizon_days = horizon;
    traj.presence.assign(n_symptoms, Timeline(static_cast<std::size_t>(horizon), 0));
    traj.observed.assign(n_symptoms, Timeline(static_cast<std::size_t>(horizon), 0));

    for (const auto& link : config.links) {
        if (link.syndrome_id != syndrome_id) continue;
        if (!rng.bernoulli(link.occur_prob)) continue;
        const int onset = sample_onset_day(link.onset_mean_days, link.onset_sd_days, rng);
        const auto symptom = static_cast<std::size_t>(link.symptom_id);
        auto& row = traj.presence[symptom];
        if (config.symptoms[symptom].kind == SymptomKind::Recurrent) {
            row = sample_recurrent_timeline(onset, *link.episode_on_rate, *link.episode_off_rate,
                                            horizon, rng);
        } else if (onset < horizon) {
            std::fill(row.begin() + onset, row.end(), std::uint8_t{1});
        }
    }

    for (std::size_t s = 0; s < n_symptoms; ++s) {
        if (config.symptoms[s].kind == SymptomKind::Latent) continue;
        traj.observed[s] = traj.presence[s];
        auto it = std::find(traj.observed[s].begin(), traj.observed[s].end(), std::uint8_t{1});
        if (it != traj.observed[s].end()) {
            const int day = static_cast<int>(it - traj.observed[s].begin());
            if (!traj.first_observed_day || day < *traj.first_observed_day) {
                traj.first_observed_day = day;
            }
        }
    }
    return traj;
}

ObservationHistory history_at(const Trajectory& trajectory, int t) {
    if (t < 0 || t > trajectory.horizon_days) {
        throw std::out_of_range("history_at: t=" + std::to_string(t) + " outside [0, " +
                                std::to_string(trajectory.horizon_days) + "]");
    }
    ObservationHistory history;
    history.t = t;
    history.days_observed.resize(trajectory.observed.size());
    for (std::size_t s = 0; s < trajectory.observed.size(); ++s) {
        for (int day = 0; day < t; ++day) {
            if (trajectory.observed[s][static_cast<std::size_t>(day)]) {
                history.days_observed[s].push_back(day);
                if (!history.first_observed_day || day < *history.first_observed_day) {
                    history.first_observed_day = day;
                }
            }
        }
    }
    return history;
}

std::vector<Trajectory> simulate_cohort(const ScenarioConfig& config, std::span<const int> counts,
                                        std::uint64_t master_seed, int threads) {
    std::vector<int> syndrome_of;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        if (counts[s] < 0) throw std::invalid_argument("simulate_cohort: negative count");
        if (counts[s] > 0 && s >= config.syndromes.size()) {
            throw std::out_of_range("simulate_cohort: counts reference unknown syndrome " +
                                    std::to_string(s));
        }
        syndrome_of.insert(syndrome_of.end(), static_cast<std::size_t>(counts[s]),
                           static_cast<int>(s));
    }
    std::vector<Trajectory> cohort(syndrome_of.size());
    parallel_for(cohort.size(), threads, [&](std::size_t i) {
        Rng rng = Rng::derive(master_seed, i, StreamTag::Cohort);
        cohort[i] = simulate_trajectory(config, syndrome_of[i], rng);
    });
    return cohort;
}

void write_cohort_csv(const std::vector<Trajectory>& cohort, const std::filesystem::path& path) {
    std::FILE* file = std::fopen(path.string().c_str(), "wb");
    if (!file) throw IoError("cannot write cohort file '" + path.string() + "'");
    std::string buffer = "trajectory_id,syndrome_id,symptom_id,day,present,observed\n";
    char line[96];
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& traj = cohort[i];
        for (std::size_t s = 0; s < traj.presence.size(); ++s) {
            for (std::size_t d = 0; d < traj.presence[s].size(); ++d) {
                if (!traj.presence[s][d]) continue;
                const int n = std::snprintf(line, sizeof line, "%zu,%d,%zu,%zu,1,%d\n", i,
                                            traj.syndrome_id, s, d, traj.observed[s][d] ? 1 : 0);
                buffer.append(line, static_cast<std::size_t>(n));
            }
        }
        if (buffer.size() > (1u << 20)) {
            std::fwrite(buffer.data(), 1, buffer.size(), file);
            buffer.clear();
        }
    }
    std::fwrite(buffer.data(), 1, buffer.size(), file);
    const bool failed = std::ferror(file) != 0;
    std::fclose(file);
    if (failed) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

template <class Int>
Int parse_field(std::string_view field, std::size_t line_no) {
    Int value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw FormatError("cohort CSV line " + std::to_string(line_no) + ": bad integer '" +
                          std::string(field) + "'");
    }
    return value;
}

}  // namespace

std::vector<Trajectory> read_cohort_csv(const std::filesystem::path& path,
                                        const ScenarioConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cohort file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) ||
        line != "trajectory_id,syndrome_id,symptom_id,day,present,observed") {
        throw FormatError("cohort CSV: unexpected header in '" + path.string() + "'");
    }
    const int horizon = config.horizon_days;
    const auto n_symptoms = config.symptoms.size();
    std::map<std::size_t, Trajectory> by_id;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::string_view rest = line;
        std::string_view fields[6];
        for (int f = 0; f < 6; ++f) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (f == 5)) {
                throw FormatError("cohort CSV line " + std::to_string(line_no) +
                                  ": expected 6 fields");
            }
            fields[f] = rest.substr(0, comma);
            if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
        }
        const auto id = parse_field<std::size_t>(fields[0], line_no);
        const auto syndrome = parse_field<int>(fields[1], line_no);
        const auto symptom = parse_field<std::size_t>(fields[2], line_no);
        const auto day = parse_field<int>(fields[3], line_no);
        const auto present = parse_field<int>(fields[4], line_no);
        const auto observed = parse_field<int>(fields[5], line_no);
        if (syndrome < 0 || syndrome >= static_cast<int>(config.syndromes.size()) ||
            symptom >= n_symptoms || day < 0 || day >= horizon || present != 1 ||
            (observed != 0 && observed != 1)) {
            throw FormatError("cohort CSV line " + std::to_string(line_no) +
                              ": value out of range for the scenario");
        }
        auto [it, inserted] = by_id.try_emplace(id);
        Trajectory& traj = it->second;
        if (inserted) {
            traj.syndrome_id = syndrome;
            traj.is_rare = config.syndromes[static_cast<std::size_t>(syndrome)].is_rare;
            traj.horizon_days = horizon;
            traj.presence.assign(n_symptoms, Timeline(static_cast<std::size_t>(horizon), 0));
            traj.observed.assign(n_symptoms, Timeline(static_cast<std::size_t>(horizon), 0));
        } else if (traj.syndrome_id != syndrome) {
            throw FormatError("cohort CSV line " + std::to_string(line_no) +
                              ": syndrome changes within trajectory " + std::to_string(id));
        }
        traj.presence[symptom][static_cast<std::size_t>(day)] = 1;
        if (observed) {
            traj.observed[symptom][static_cast<std::size_t>(day)] = 1;
            if (!traj.first_observed_day || day < *traj.first_observed_day) {
                traj.first_observed_day = day;
            }
        }
    }
    std::vector<Trajectory> cohort;
    cohort.reserve(by_id.size());
    for (auto& [id, traj] : by_id) cohort.push_back(std::move(traj));
    return cohort;
}

}  // namespace rarepath
