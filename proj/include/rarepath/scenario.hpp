#pragma once

#include "rarepath/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rarepath {

enum class SymptomKind { Latent, PermanentVisible, Recurrent };

std::string_view to_string(SymptomKind kind) noexcept;
std::optional<SymptomKind> parse_symptom_kind(std::string_view text) noexcept;

struct SymptomSpec {
    int id = 0;
    std::string name;
    SymptomKind kind = SymptomKind::PermanentVisible;

    bool operator==(const SymptomSpec&) const = default;
};

/// Syndrome -> symptom edge of the bipartite model. Onset is per link
/// (occurrence-time profiles are conditional on the syndrome).
struct SymptomLink {
    int syndrome_id = 0;
    int symptom_id = 0;
    double occur_prob = 0.0;
    double onset_mean_days = 0.0;
    double onset_sd_days = 1.0;
    // Set iff the symptom is Recurrent.
    std::optional<double> episode_on_rate;
    std::optional<double> episode_off_rate;

    bool operator==(const SymptomLink&) const = default;
};

struct SyndromeSpec {
    int id = 0;
    std::string name;
    bool is_rare = false;
    double prevalence = 0.0;

    bool operator==(const SyndromeSpec&) const = default;
};

struct ScenarioConfig {
    std::vector<SyndromeSpec> syndromes;
    std::vector<SymptomSpec> symptoms;
    std::vector<SymptomLink> links;
    int horizon_days = 0;

    bool operator==(const ScenarioConfig&) const = default;

    std::size_t symptom_count() const noexcept { return symptoms.size(); }
    std::size_t syndrome_count() const noexcept { return syndromes.size(); }

    /// Links of one syndrome, in file order.
    std::vector<SymptomLink> links_of(int syndrome_id) const;
};

/// Malformed scenario file (not JSON, wrong types, missing keys).
class ScenarioParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed file whose content breaks one or more invariants.
class ScenarioValidationError : public std::runtime_error {
public:
    explicit ScenarioValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Every violated invariant, each message starting with a field path such as
/// `links[3].occur_prob`. Empty iff the config is valid.
std::vector<std::string> validate_scenario(const ScenarioConfig& config);

ScenarioConfig scenario_from_json(std::string_view text);
/// Canonical form: sorted keys, 2-space indent, trailing newline.
std::string scenario_to_json(const ScenarioConfig& config);

ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path);

/// Procedural world with the layout of the reference experiment: 4 syndromes
/// (#0 healthy with no links, #1 rare, #2 and #3 common), 10 symptoms covering
/// all three kinds, link probabilities in [0.15, 0.95], onset means in
/// [0, 365] days, horizon of four years. Pure function of `seed`.
ScenarioConfig paper_scenario(std::uint64_t seed);

}  // namespace rarepath
