#include "rarepath/scenario.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace rarepath;

namespace {

bool mentions(const std::vector<std::string>& violations, const std::string& needle) {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

const char* kValidFile = R"({
  "horizon_days": 100,
  "syndromes": [
    {"id": 0, "name": "healthy", "is_rare": false, "prevalence": 0.5},
    {"id": 1, "name": "rare", "is_rare": true, "prevalence": 0.5}
  ],
  "symptoms": [
    {"id": 0, "name": "rash", "kind": "PermanentVisible"},
    {"id": 1, "name": "migraine", "kind": "Recurrent"}
  ],
  "links": [
    {"syndrome_id": 1, "symptom_id": 0, "occur_prob": 0.8, "onset_mean_days": 10, "onset_sd_days": 2},
    {"syndrome_id": 1, "symptom_id": 1, "occur_prob": 0.5, "onset_mean_days": 30, "onset_sd_days": 5,
     "episode_on_rate": 0.2, "episode_off_rate": 0.05}
  ]
})";

}  // namespace

TEST_CASE("paper_scenario has the reference layout") {
    const auto c = paper_scenario(42);
    CHECK(c.syndromes.size() == 4);
    CHECK(c.symptoms.size() == 10);
    CHECK(c.horizon_days == 1460);
    CHECK(validate_scenario(c).empty());
    CHECK(c.links_of(0).empty());
    CHECK(c.syndromes[1].is_rare);
    CHECK_FALSE(c.syndromes[0].is_rare);
    CHECK_FALSE(c.syndromes[2].is_rare);
    CHECK_FALSE(c.syndromes[3].is_rare);
    std::set<SymptomKind> kinds;
    for (const auto& s : c.symptoms) kinds.insert(s.kind);
    CHECK(kinds.size() == 3);
    for (const auto& l : c.links) {
        CHECK(l.occur_prob >= 0.15);
        CHECK(l.occur_prob <= 0.95);
        CHECK(l.onset_mean_days >= 0.0);
        CHECK(l.onset_mean_days <= 365.0);
    }
}

TEST_CASE("paper_scenario is a pure function of its seed") {
    CHECK(paper_scenario(42) == paper_scenario(42));
    CHECK(scenario_to_json(paper_scenario(7)) == scenario_to_json(paper_scenario(7)));
    CHECK(paper_scenario(42).links != paper_scenario(43).links);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto c = paper_scenario(seed);
        CHECK(validate_scenario(c).empty());
        for (int s = 1; s < 4; ++s) CHECK(c.links_of(s).size() >= 2);
    }
}

TEST_CASE("save then load is the identity and byte-stable") {
    testing::TempDir dir;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto original = paper_scenario(seed);
        const auto path = dir / ("s" + std::to_string(seed) + ".json");
        save_scenario(original, path);
        const auto loaded = load_scenario(path);
        CHECK(loaded == original);
        CHECK(scenario_to_json(loaded) == testing::slurp(path));
    }
    const auto tiny = testing::tiny_scenario();
    save_scenario(tiny, dir / "tiny.json");
    CHECK(load_scenario(dir / "tiny.json") == tiny);
}

TEST_CASE("load_scenario accepts a hand-written file") {
    testing::TempDir dir;
    testing::spit(dir / "ok.json", kValidFile);
    const auto c = load_scenario(dir / "ok.json");
    CHECK(c.syndromes.size() == 2);
    CHECK(c.symptoms.size() == 2);
    REQUIRE(c.links.size() == 2);
    CHECK(c.links[1].episode_on_rate == doctest::Approx(0.2));
    CHECK_FALSE(c.links[0].episode_on_rate.has_value());
}

TEST_CASE("canonical form sorts keys with two-space indent") {
    const auto text = scenario_to_json(testing::tiny_scenario());
    CHECK(text.rfind("{\n  \"horizon_days\": 5,\n  \"links\": [", 0) == 0);
    CHECK(text.back() == '\n');
}

TEST_CASE("prevalence defaults to uniform when absent") {
    const std::string key = ", \"prevalence\": 0.5";
    std::string partial = kValidFile;
    partial.erase(partial.find(key), key.size());
    CHECK_THROWS_AS(scenario_from_json(partial), ScenarioValidationError);

    std::string none = partial;
    none.erase(none.find(key), key.size());
    const auto c = scenario_from_json(none);
    CHECK(c.syndromes[0].prevalence == 0.5);
    CHECK(c.syndromes[1].prevalence == 0.5);
}

TEST_CASE("validation errors name the offending field") {
    testing::TempDir dir;

    SUBCASE("prevalences summing to 0.9") {
        std::string text = kValidFile;
        text.replace(text.find("0.5"), 3, "0.4");
        testing::spit(dir / "bad.json", text);
        try {
            load_scenario(dir / "bad.json");
            FAIL("expected a validation error");
        } catch (const ScenarioValidationError& e) {
            CHECK(mentions(e.violations(), "prevalence"));
        }
    }
    SUBCASE("recurrent link without episode rates") {
        auto c = testing::tiny_scenario();
        c.symptoms[1].kind = SymptomKind::Recurrent;
        const auto v = validate_scenario(c);
        CHECK(mentions(v, "links[2]"));
        CHECK(mentions(v, "links[3]"));
        CHECK(mentions(v, "episode_on_rate"));
    }
    SUBCASE("occur_prob out of range") {
        auto c = testing::tiny_scenario();
        c.links[1].occur_prob = 1.5;
        const auto v = validate_scenario(c);
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("links[1].occur_prob") == 0);
    }
    SUBCASE("duplicate link") {
        auto c = testing::tiny_scenario();
        c.links.push_back(c.links[0]);
        const auto v = validate_scenario(c);
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("(syndrome 0, symptom 0)") != std::string::npos);
    }
    SUBCASE("episode rates on a non-recurrent symptom") {
        auto c = testing::tiny_scenario();
        c.links[0].episode_on_rate = 0.1;
        CHECK(mentions(validate_scenario(c), "only allowed for recurrent"));
    }
    SUBCASE("structural problems") {
        auto c = testing::tiny_scenario();
        c.links[0].symptom_id = 9;
        c.symptoms[1].id = 5;
        c.horizon_days = 0;
        c.syndromes[1].is_rare = false;
        const auto v = validate_scenario(c);
        CHECK(mentions(v, "links[0].symptom_id"));
        CHECK(mentions(v, "symptoms[1].id"));
        CHECK(mentions(v, "horizon_days"));
        CHECK(mentions(v, "must be rare"));
    }
    SUBCASE("a syndrome without links is allowed") {
        auto c = testing::tiny_scenario();
        c.links.erase(c.links.begin());
        c.links.pop_back();
        CHECK(validate_scenario(c).empty());
    }
}

TEST_CASE("parse and I/O failures") {
    testing::TempDir dir;
    CHECK_THROWS_AS(load_scenario(dir / "missing.json"), IoError);
    CHECK_THROWS_AS(scenario_from_json("{ not json"), ScenarioParseError);
    CHECK_THROWS_AS(scenario_from_json("[]"), ScenarioParseError);
    std::string text = kValidFile;
    text.replace(text.find("\"horizon_days\": 100"), 19, "\"horizon_days\": \"x\"");
    CHECK_THROWS_AS(scenario_from_json(text), ScenarioParseError);
    std::string kind = kValidFile;
    kind.replace(kind.find("Recurrent"), 9, "Chronic");
    CHECK_THROWS_AS(scenario_from_json(kind), ScenarioParseError);
    CHECK_THROWS_AS(save_scenario(testing::tiny_scenario(), dir / "no/such/dir/x.json"), IoError);
}
