#include "rarepath/scenario.hpp"

#include "rarepath/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace rarepath {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out = "scenario validation failed:";
    for (const auto& line : lines) {
        out += "\n  - ";
        out += line;
    }
    return out;
}

std::string path_of(std::string_view array, std::size_t index, std::string_view field) {
    std::ostringstream os;
    os << array << '[' << index << ']';
    if (!field.empty()) os << '.' << field;
    return os.str();
}

const json& require(const json& object, std::string_view key, const std::string& where) {
    auto it = object.find(key);
    if (it == object.end()) {
        throw ScenarioParseError(where + ": missing key '" + std::string(key) + "'");
    }
    return *it;
}

int require_int(const json& object, std::string_view key, const std::string& where) {
    const json& value = require(object, key, where);
    if (!value.is_number_integer()) {
        throw ScenarioParseError(where + "." + std::string(key) + ": expected an integer");
    }
    return value.get<int>();
}

double require_number(const json& object, std::string_view key, const std::string& where) {
    const json& value = require(object, key, where);
    if (!value.is_number()) {
        throw ScenarioParseError(where + "." + std::string(key) + ": expected a number");
    }
    return value.get<double>();
}

std::optional<double> optional_number(const json& object, std::string_view key,
                                      const std::string& where) {
    auto it = object.find(key);
    if (it == object.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) {
        throw ScenarioParseError(where + "." + std::string(key) + ": expected a number");
    }
    return it->get<double>();
}

std::string require_string(const json& object, std::string_view key, const std::string& where) {
    const json& value = require(object, key, where);
    if (!value.is_string()) {
        throw ScenarioParseError(where + "." + std::string(key) + ": expected a string");
    }
    return value.get<std::string>();
}

const json& require_array(const json& root, std::string_view key) {
    const json& value = require(root, key, "scenario");
    if (!value.is_array()) {
        throw ScenarioParseError("scenario." + std::string(key) + ": expected an array");
    }
    return value;
}

}  // namespace

std::string_view to_string(SymptomKind kind) noexcept {
    switch (kind) {
        case SymptomKind::Latent: return "Latent";
        case SymptomKind::PermanentVisible: return "PermanentVisible";
        case SymptomKind::Recurrent: return "Recurrent";
    }
    return "Latent";
}

std::optional<SymptomKind> parse_symptom_kind(std::string_view text) noexcept {
    if (text == "Latent") return SymptomKind::Latent;
    if (text == "PermanentVisible") return SymptomKind::PermanentVisible;
    if (text == "Recurrent") return SymptomKind::Recurrent;
    return std::nullopt;
}

std::vector<SymptomLink> ScenarioConfig::links_of(int syndrome_id) const {
    std::vector<SymptomLink> out;
    for (const auto& link : links) {
        if (link.syndrome_id == syndrome_id) out.push_back(link);
    }
    return out;
}

ScenarioValidationError::ScenarioValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_lines(violations)), violations_{std::move(violations)} {}

std::vector<std::string> validate_scenario(const ScenarioConfig& config) {
    std::vector<std::string> out;
    const auto n_syndromes = static_cast<int>(config.syndromes.size());
    const auto n_symptoms = static_cast<int>(config.symptoms.size());

    if (config.horizon_days <= 0) out.push_back("horizon_days: must be > 0");

    if (config.syndromes.empty()) out.push_back("syndromes: at least one syndrome is required");
    double prevalence_sum = 0.0;
    bool any_rare = false;
    bool any_common = false;
    for (std::size_t i = 0; i < config.syndromes.size(); ++i) {
        const auto& s = config.syndromes[i];
        if (s.id != static_cast<int>(i)) {
            out.push_back(path_of("syndromes", i, "id") + ": expected " + std::to_string(i) +
                          " (ids must be contiguous from 0), got " + std::to_string(s.id));
        }
        if (!(s.prevalence >= 0.0 && s.prevalence <= 1.0)) {
            out.push_back(path_of("syndromes", i, "prevalence") + ": must lie in [0, 1]");
        }
        prevalence_sum += s.prevalence;
        (s.is_rare ? any_rare : any_common) = true;
    }
    if (!config.syndromes.empty() && !(std::abs(prevalence_sum - 1.0) <= 1e-9)) {
        std::ostringstream os;
        os.precision(12);
        os << "syndromes[*].prevalence: must sum to 1, got " << prevalence_sum;
        out.push_back(os.str());
    }
    if (!config.syndromes.empty() && !any_rare) {
        out.push_back("syndromes[*].is_rare: at least one syndrome must be rare");
    }
    if (!config.syndromes.empty() && !any_common) {
        out.push_back("syndromes[*].is_rare: at least one syndrome must be non-rare");
    }

    for (std::size_t i = 0; i < config.symptoms.size(); ++i) {
        if (config.symptoms[i].id != static_cast<int>(i)) {
            out.push_back(path_of("symptoms", i, "id") + ": expected " + std::to_string(i) +
                          " (ids must be contiguous from 0), got " +
                          std::to_string(config.symptoms[i].id));
        }
    }

    std::set<std::pair<int, int>> seen;
    for (std::size_t i = 0; i < config.links.size(); ++i) {
        const auto& l = config.links[i];
        bool refs_ok = true;
        if (l.syndrome_id < 0 || l.syndrome_id >= n_syndromes) {
            out.push_back(path_of("links", i, "syndrome_id") + ": unknown syndrome " +
                          std::to_string(l.syndrome_id));
            refs_ok = false;
        }
        if (l.symptom_id < 0 || l.symptom_id >= n_symptoms) {
            out.push_back(path_of("links", i, "symptom_id") + ": unknown symptom " +
                          std::to_string(l.symptom_id));
            refs_ok = false;
        }
        if (!seen.emplace(l.syndrome_id, l.symptom_id).second) {
            out.push_back(path_of("links", i, "") + ": duplicate link for (syndrome " +
                          std::to_string(l.syndrome_id) + ", symptom " +
                          std::to_string(l.symptom_id) + ")");
        }
        if (!(l.occur_prob >= 0.0 && l.occur_prob <= 1.0)) {
            out.push_back(path_of("links", i, "occur_prob") + ": must lie in [0, 1]");
        }
        if (!(l.onset_mean_days >= 0.0) || !std::isfinite(l.onset_mean_days)) {
            out.push_back(path_of("links", i, "onset_mean_days") + ": must be finite and >= 0");
        }
        // sigma = 0 is the degenerate (deterministic onset) case.
        if (!(l.onset_sd_days >= 0.0) || !std::isfinite(l.onset_sd_days)) {
            out.push_back(path_of("links", i, "onset_sd_days") + ": must be finite and >= 0");
        }
        if (!refs_ok) continue;
        const bool recurrent =
            config.symptoms[static_cast<std::size_t>(l.symptom_id)].kind == SymptomKind::Recurrent;
        const bool has_on = l.episode_on_rate.has_value();
        const bool has_off = l.episode_off_rate.has_value();
        if (recurrent) {
            if (!has_on || !has_off) {
                out.push_back(path_of("links", i, "") +
                              ": recurrent symptom requires episode_on_rate and episode_off_rate");
            }
            if (has_on && !(*l.episode_on_rate > 0.0 && std::isfinite(*l.episode_on_rate))) {
                out.push_back(path_of("links", i, "episode_on_rate") + ": must be > 0");
            }
            if (has_off && !(*l.episode_off_rate > 0.0 && std::isfinite(*l.episode_off_rate))) {
                out.push_back(path_of("links", i, "episode_off_rate") + ": must be > 0");
            }
        } else if (has_on || has_off) {
            out.push_back(path_of("links", i, "") +
                          ": episode rates are only allowed for recurrent symptoms");
        }
    }
    return out;
}

ScenarioConfig scenario_from_json(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioParseError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ScenarioParseError("scenario: top level must be an object");

    ScenarioConfig config;
    config.horizon_days = require_int(root, "horizon_days", "scenario");

    const json& syndromes = require_array(root, "syndromes");
    std::size_t with_prevalence = 0;
    for (std::size_t i = 0; i < syndromes.size(); ++i) {
        const auto where = path_of("syndromes", i, "");
        const json& s = syndromes[i];
        if (!s.is_object()) throw ScenarioParseError(where + ": expected an object");
        SyndromeSpec spec;
        spec.id = require_int(s, "id", where);
        spec.name = require_string(s, "name", where);
        const json& rare = require(s, "is_rare", where);
        if (!rare.is_boolean()) throw ScenarioParseError(where + ".is_rare: expected a boolean");
        spec.is_rare = rare.get<bool>();
        if (auto p = optional_number(s, "prevalence", where)) {
            spec.prevalence = *p;
            ++with_prevalence;
        }
        config.syndromes.push_back(std::move(spec));
    }
    if (with_prevalence == 0 && !config.syndromes.empty()) {
        const double uniform = 1.0 / static_cast<double>(config.syndromes.size());
        for (auto& s : config.syndromes) s.prevalence = uniform;
    } else if (with_prevalence != config.syndromes.size()) {
        throw ScenarioValidationError(
            {"syndromes[*].prevalence: either every syndrome or none must specify a prevalence"});
    }

    const json& symptoms = require_array(root, "symptoms");
    for (std::size_t i = 0; i < symptoms.size(); ++i) {
        const auto where = path_of("symptoms", i, "");
        const json& s = symptoms[i];
        if (!s.is_object()) throw ScenarioParseError(where + ": expected an object");
        SymptomSpec spec;
        spec.id = require_int(s, "id", where);
        spec.name = require_string(s, "name", where);
        const auto kind_text = require_string(s, "kind", where);
        auto kind = parse_symptom_kind(kind_text);
        if (!kind) {
            throw ScenarioParseError(where + ".kind: unknown symptom kind '" + kind_text + "'");
        }
        spec.kind = *kind;
        config.symptoms.push_back(std::move(spec));
    }

    const json& links = require_array(root, "links");
    for (std::size_t i = 0; i < links.size(); ++i) {
        const auto where = path_of("links", i, "");
        const json& l = links[i];
        if (!l.is_object()) throw ScenarioParseError(where + ": expected an object");
        SymptomLink link;
        link.syndrome_id = require_int(l, "syndrome_id", where);
        link.symptom_id = require_int(l, "symptom_id", where);
        link.occur_prob = require_number(l, "occur_prob", where);
        link.onset_mean_days = require_number(l, "onset_mean_days", where);
        link.onset_sd_days = require_number(l, "onset_sd_days", where);
        link.episode_on_rate = optional_number(l, "episode_on_rate", where);
        link.episode_off_rate = optional_number(l, "episode_off_rate", where);
        config.links.push_back(link);
    }
    return config;
}

std::string scenario_to_json(const ScenarioConfig& config) {
    json root = json::object();
    root["horizon_days"] = config.horizon_days;
    json syndromes = json::array();
    for (const auto& s : config.syndromes) {
        syndromes.push_back(
            {{"id", s.id}, {"name", s.name}, {"is_rare", s.is_rare}, {"prevalence", s.prevalence}});
    }
    root["syndromes"] = std::move(syndromes);
    json symptoms = json::array();
    for (const auto& s : config.symptoms) {
        symptoms.push_back({{"id", s.id}, {"name", s.name}, {"kind", to_string(s.kind)}});
    }
    root["symptoms"] = std::move(symptoms);
    json links = json::array();
    for (const auto& l : config.links) {
        json entry = {{"syndrome_id", l.syndrome_id},
                      {"symptom_id", l.symptom_id},
                      {"occur_prob", l.occur_prob},
                      {"onset_mean_days", l.onset_mean_days},
                      {"onset_sd_days", l.onset_sd_days}};
        if (l.episode_on_rate) entry["episode_on_rate"] = *l.episode_on_rate;
        if (l.episode_off_rate) entry["episode_off_rate"] = *l.episode_off_rate;
        links.push_back(std::move(entry));
    }
    root["links"] = std::move(links);
    return root.dump(2) + "\n";
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scenario file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    ScenarioConfig config = scenario_from_json(buffer.str());
    if (auto violations = validate_scenario(config); !violations.empty()) {
        throw ScenarioValidationError(std::move(violations));
    }
    return config;
}

void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write scenario file '" + path.string() + "'");
    out << scenario_to_json(config);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ScenarioConfig paper_scenario(std::uint64_t seed) {
    constexpr int kSymptoms = 10;
    constexpr int kSyndromes = 4;
    constexpr double kDisplayCutoff = 0.15;

    Rng rng = Rng::derive(seed, 0, StreamTag::Scenario);
    ScenarioConfig config;
    config.horizon_days = 4 * 365;

    const std::array<const char*, kSyndromes> names{"RAS", "syndrome_1", "syndrome_2",
                                                    "syndrome_3"};
    for (int i = 0; i < kSyndromes; ++i) {
        config.syndromes.push_back({i, names[static_cast<std::size_t>(i)], i == 1, 0.25});
    }

    std::array<SymptomKind, kSymptoms> kinds{
        SymptomKind::Latent,           SymptomKind::Latent,           SymptomKind::Latent,
        SymptomKind::PermanentVisible, SymptomKind::PermanentVisible, SymptomKind::PermanentVisible,
        SymptomKind::Recurrent,        SymptomKind::Recurrent,        SymptomKind::Recurrent,
        SymptomKind::Recurrent};
    for (std::size_t i = kinds.size() - 1; i > 0; --i) {
        std::swap(kinds[i], kinds[rng.below(i + 1)]);
    }
    for (int i = 0; i < kSymptoms; ++i) {
        config.symptoms.push_back(
            {i, "symptom_" + std::to_string(i), kinds[static_cast<std::size_t>(i)]});
    }

    // Syndrome 0 is the healthy class and keeps no links. The others get a
    // sparse link set; about half of the candidate edges are weak (< 15%)
    // and are left out. Redraw until the syndrome has two or more links, at
    // least one of them observable.
    for (int syndrome = 1; syndrome < kSyndromes; ++syndrome) {
        std::vector<SymptomLink> drawn;
        for (;;) {
            drawn.clear();
            bool observable = false;
            for (int symptom = 0; symptom < kSymptoms; ++symptom) {
                if (rng.uniform() < 0.5) continue;
                SymptomLink link;
                link.syndrome_id = syndrome;
                link.symptom_id = symptom;
                link.occur_prob = rng.uniform(kDisplayCutoff, 0.95);
                link.onset_mean_days = rng.uniform(0.0, 365.0);
                link.onset_sd_days = rng.uniform(10.0, 60.0);
                const auto kind = kinds[static_cast<std::size_t>(symptom)];
                if (kind == SymptomKind::Recurrent) {
                    link.episode_on_rate = 1.0 / rng.uniform(2.0, 10.0);
                    link.episode_off_rate = 1.0 / rng.uniform(15.0, 90.0);
                }
                observable = observable || kind != SymptomKind::Latent;
                drawn.push_back(link);
            }
            if (drawn.size() >= 2 && observable) break;
        }
        config.links.insert(config.links.end(), drawn.begin(), drawn.end());
    }
    return config;
}

}  // namespace rarepath
