#include "rarepath/cli.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <map>
#include <sstream>
#include <sys/wait.h>

using namespace rarepath;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "rarepath");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// Small enough to keep the suite fast.
std::vector<std::string> quick(const fs::path& out) {
    return {"--out", out.string(), "--per-syndrome", "20", "--trees", "10", "--n-eval", "100",
            "--grid-points", "11"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        files[entry.path().filename().string()] = testing::slurp(entry.path());
    }
    return files;
}

}  // namespace

TEST_CASE("generate") {
    testing::TempDir dir;
    REQUIRE(invoke({"generate", "--seed", "42", "--out", (dir / "a").string()}).code == 0);
    REQUIRE(invoke({"generate", "--seed", "42", "--out", (dir / "b").string()}).code == 0);
    REQUIRE(invoke({"generate", "--seed", "43", "--out", (dir / "c").string()}).code == 0);
    const auto a = testing::slurp(dir / "a" / "scenario.json");
    CHECK(a == testing::slurp(dir / "b" / "scenario.json"));
    CHECK(a != testing::slurp(dir / "c" / "scenario.json"));
    CHECK(load_scenario(dir / "a" / "scenario.json") == paper_scenario(42));
}

TEST_CASE("simulate") {
    testing::TempDir dir;
    const auto args = concat({"simulate"}, quick(dir / "run"));
    REQUIRE(invoke(args).code == 0);
    const auto first = snapshot(dir / "run");
    CHECK(first.count("cohort.csv") == 1);
    CHECK(first.count("manifest.json") == 1);
    REQUIRE(invoke(args).code == 0);
    CHECK(snapshot(dir / "run") == first);

    REQUIRE(invoke(concat({"simulate", "--horizon", "1"}, quick(dir / "h1"))).code == 0);
    std::istringstream rows(testing::slurp(dir / "h1" / "cohort.csv"));
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        REQUIRE(fields.size() == 6);
        CHECK(fields[3] == "0");
    }
}

TEST_CASE("train then sweep then trace") {
    testing::TempDir dir;
    const auto out = dir / "run";
    const auto train = invoke(concat({"train"}, quick(out)));
    REQUIRE(train.code == 0);
    CHECK(train.out.find("out-of-bag accuracy") != std::string::npos);
    const auto model = testing::slurp(out / "model.rpf");
    REQUIRE(invoke(concat({"train", "--threads", "3"}, quick(out))).code == 0);
    CHECK(testing::slurp(out / "model.rpf") == model);

    REQUIRE(invoke(concat({"simulate"}, quick(out))).code == 0);
    REQUIRE(invoke(concat({"train", "--cohort", (out / "cohort.csv").string()}, quick(out))).code ==
            0);
    CHECK(testing::slurp(out / "model.rpf") == model);

    const auto sweep = invoke(concat({"sweep"}, quick(out)));
    REQUIRE(sweep.code == 0);
    CHECK(sweep.out.rfind("optimal_tau ", 0) == 0);
    const auto csv = testing::slurp(out / "cost_curve.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
    CHECK(fs::exists(out / "cost_curve.svg"));
    CHECK(testing::slurp(out / "sweep_summary.txt").find("send_none_mean_cost") !=
          std::string::npos);

    const auto full = invoke(concat({"sweep", "--grid-points", "101", "--no-svg"},
                                    {"--out", (dir / "full").string(), "--model",
                                     (out / "model.rpf").string(), "--per-syndrome", "20",
                                     "--n-eval", "50"}));
    REQUIRE(full.code == 0);
    const auto full_csv = testing::slurp(dir / "full" / "cost_curve.csv");
    CHECK(std::count(full_csv.begin(), full_csv.end(), '\n') == 102);
    CHECK_FALSE(fs::exists(dir / "full" / "cost_curve.svg"));

    // Trajectories 0..19 belong to the healthy syndrome.
    const auto healthy = invoke(concat({"trace", "--trajectory", "3"}, quick(out)));
    REQUIRE(healthy.code == 0);
    CHECK(healthy.out.find("never shows an observable symptom") != std::string::npos);
    CHECK(testing::slurp(out / "trace_3.csv") == "day,observed_symptoms,prediction\n");

    const auto rare = invoke(concat({"trace", "--trajectory", "25"}, quick(out)));
    REQUIRE(rare.code == 0);
    CHECK(testing::slurp(out / "trace_25.csv").size() > 40);
    CHECK(invoke(concat({"trace", "--trajectory", "80"}, quick(out))).code == 1);
}

TEST_CASE("all is reproducible") {
    testing::TempDir dir;
    const auto out = dir / "run";
    REQUIRE(invoke(concat({"all"}, quick(out))).code == 0);
    const auto first = snapshot(out);
    for (const char* name : {"scenario.json", "manifest.json", "cohort.csv", "model.rpf",
                             "train_summary.txt", "cost_curve.csv", "cost_curve.svg",
                             "sweep_summary.txt"}) {
        CHECK_MESSAGE(first.count(name) == 1, name);
    }
    REQUIRE(invoke(concat({"all", "--threads", "4"}, quick(out))).code == 0);
    CHECK(snapshot(out) == first);

    REQUIRE(invoke(concat({"all", "--manifest", (out / "manifest.json").string()},
                          {"--out", (dir / "again").string()}))
                .code == 0);
    auto again = snapshot(dir / "again");
    again.erase("manifest.json");
    auto expected = first;
    expected.erase("manifest.json");
    CHECK(again == expected);
}

TEST_CASE("refuses a single-class training set") {
    testing::TempDir dir;
    auto config = testing::tiny_scenario();
    config.links = {config.links[0]};
    save_scenario(config, dir / "no_rare.json");
    const auto r = invoke(concat({"train", "--scenario", (dir / "no_rare.json").string()},
                                 quick(dir / "run")));
    CHECK(r.code == 1);
    CHECK(r.err.find("both rare and non-rare") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "run" / "model.rpf"));
}

TEST_CASE("exit codes") {
    testing::TempDir dir;
    testing::spit(dir / "blocker", "x");
    CHECK(invoke(concat({"simulate"}, quick(dir / "blocker" / "sub"))).code == 2);
    CHECK(invoke({"sweep", "--out", (dir / "empty").string()}).code == 2);
    CHECK(invoke({"simulate", "--scenario", (dir / "missing.json").string(), "--out",
                  (dir / "x").string()})
              .code == 2);

    testing::spit(dir / "bad.json", "{\"horizon_days\": 10}");
    CHECK(invoke({"simulate", "--scenario", (dir / "bad.json").string(), "--out",
                  (dir / "x").string()})
              .code == 1);
    auto invalid = testing::tiny_scenario();
    invalid.links[0].occur_prob = 1.5;
    testing::spit(dir / "invalid.json", scenario_to_json(invalid));
    const auto r = invoke({"simulate", "--scenario", (dir / "invalid.json").string(), "--out",
                           (dir / "x").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("links[0].occur_prob") != std::string::npos);

    CHECK(invoke({"simulate", "--per-syndrome", "-4"}).code == 1);
    CHECK(invoke({"frobnicate"}).code == 1);
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({"simulate", "--cost-specialist", "-5", "--out", (dir / "y").string()}).code ==
          1);
}

TEST_CASE("installed binary propagates exit codes") {
    testing::TempDir dir;
    const std::string cli = RAREPATH_CLI_PATH;
    const auto status = [&](const std::string& args) {
        const int raw = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    CHECK(status("generate --out " + dir.path().string()) == 0);
    CHECK(status("sweep --out " + (dir / "nothing").string()) == 2);
    CHECK(status("bogus") == 1);
}

TEST_CASE("manifest round trip") {
    cli::RunManifest m;
    m.seed = 7;
    m.scenario_path = "worlds/a.json";
    m.horizon_days = 365;
    m.forest = {12, 6, 2, 3};
    m.cost.cost_specialist = 1234.5;
    m.n_eval = 99;
    m.out_dir = "some/dir";
    CHECK(cli::manifest_from_json(cli::manifest_to_json(m)) == m);
    CHECK(cli::manifest_from_json(cli::manifest_to_json(cli::RunManifest{})) == cli::RunManifest{});
    CHECK_THROWS_AS(cli::manifest_from_json("{}"), FormatError);

    cli::RunManifest bad;
    bad.snapshot_stride = 0;
    CHECK_THROWS_AS(cli::resolve_scenario(bad), ScenarioValidationError);
    cli::RunManifest shorter;
    shorter.horizon_days = 90;
    CHECK(cli::resolve_scenario(shorter).horizon_days == 90);
}
