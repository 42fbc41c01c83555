#include "rarepath/cli.hpp"

#include "rarepath/report.hpp"
#include "rarepath/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rarepath::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- manifest

std::string manifest_to_json(const RunManifest& m) {
    json root;
    root["tool_version"] = m.tool_version;
    root["seed"] = m.seed;
    root["scenario_path"] = m.scenario_path ? json(m.scenario_path->generic_string()) : json();
    root["per_syndrome"] = m.per_syndrome;
    root["snapshot_stride"] = m.snapshot_stride;
    root["horizon_days"] = m.horizon_days ? json(*m.horizon_days) : json();
    root["forest"] = {{"tree_count", m.forest.tree_count},
                      {"max_depth", m.forest.max_depth},
                      {"min_leaf_size", m.forest.min_leaf_size},
                      {"features_per_split", m.forest.features_per_split}};
    root["cost"] = {{"cost_wandering_per_day", m.cost.cost_wandering_per_day},
                    {"cost_specialist", m.cost.cost_specialist},
                    {"cost_non_specialist", m.cost.cost_non_specialist},
                    {"mean_wandering_days", m.cost.mean_wandering_days},
                    {"mean_physicians_consulted", m.cost.mean_physicians_consulted}};
    root["grid_points"] = m.grid_points;
    root["n_eval"] = m.n_eval;
    root["out_dir"] = m.out_dir.generic_string();
    return root.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    try {
        const json root = json::parse(text);
        RunManifest m;
        m.tool_version = root.at("tool_version").get<std::string>();
        m.seed = root.at("seed").get<std::uint64_t>();
        if (!root.at("scenario_path").is_null()) {
            m.scenario_path = root.at("scenario_path").get<std::string>();
        }
        m.per_syndrome = root.at("per_syndrome").get<int>();
        m.snapshot_stride = root.at("snapshot_stride").get<int>();
        if (!root.at("horizon_days").is_null()) m.horizon_days = root.at("horizon_days").get<int>();
        const auto& f = root.at("forest");
        m.forest.tree_count = f.at("tree_count").get<int>();
        m.forest.max_depth = f.at("max_depth").get<int>();
        m.forest.min_leaf_size = f.at("min_leaf_size").get<int>();
        m.forest.features_per_split = f.at("features_per_split").get<int>();
        const auto& c = root.at("cost");
        m.cost.cost_wandering_per_day = c.at("cost_wandering_per_day").get<double>();
        m.cost.cost_specialist = c.at("cost_specialist").get<double>();
        m.cost.cost_non_specialist = c.at("cost_non_specialist").get<double>();
        m.cost.mean_wandering_days = c.at("mean_wandering_days").get<double>();
        m.cost.mean_physicians_consulted = c.at("mean_physicians_consulted").get<double>();
        m.grid_points = root.at("grid_points").get<int>();
        m.n_eval = root.at("n_eval").get<int>();
        m.out_dir = root.at("out_dir").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void prepare_out_dir(const RunManifest& manifest) {
    std::error_code ec;
    fs::create_directories(manifest.out_dir, ec);
    if (ec || !fs::is_directory(manifest.out_dir)) {
        throw IoError("cannot create output directory '" + manifest.out_dir.string() + "'");
    }
    write_text_file(manifest.out_dir / "manifest.json", manifest_to_json(manifest));
}

void check_manifest(const RunManifest& m) {
    std::vector<std::string> bad;
    if (m.per_syndrome < 0) bad.push_back("per_syndrome: must be >= 0");
    if (m.snapshot_stride < 1) bad.push_back("snapshot_stride: must be >= 1");
    if (m.horizon_days && *m.horizon_days < 1) bad.push_back("horizon_days: must be >= 1");
    if (m.grid_points < 1) bad.push_back("grid_points: must be >= 1");
    if (m.n_eval < 1) bad.push_back("n_eval: must be >= 1");
    for (auto& v : validate_cost_params(m.cost)) bad.push_back(std::move(v));
    if (!bad.empty()) throw ScenarioValidationError(std::move(bad));
}

std::vector<Trajectory> training_cohort(const RunManifest& manifest, const ScenarioConfig& config,
                                        int threads) {
    const std::vector<int> counts(config.syndromes.size(), manifest.per_syndrome);
    return simulate_cohort(config, counts, manifest.seed, threads);
}

Forest load_checked_forest(const RunManifest& manifest,
                           const std::optional<fs::path>& model_path,
                           const ScenarioConfig& config) {
    Forest forest = load_forest(model_path.value_or(manifest.out_dir / "model.rpf"));
    if (forest.feature_count != feature_count_for(config.symptom_count())) {
        throw std::invalid_argument("model expects " + std::to_string(forest.feature_count) +
                                    " features, scenario yields " +
                                    std::to_string(feature_count_for(config.symptom_count())));
    }
    return forest;
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

ScenarioConfig resolve_scenario(const RunManifest& manifest) {
    check_manifest(manifest);
    ScenarioConfig config =
        manifest.scenario_path ? load_scenario(*manifest.scenario_path) : paper_scenario(manifest.seed);
    if (manifest.horizon_days) config.horizon_days = *manifest.horizon_days;
    if (auto bad = validate_scenario(config); !bad.empty()) {
        throw ScenarioValidationError(std::move(bad));
    }
    return config;
}

// ---------------------------------------------------------------- commands

fs::path cmd_generate(std::uint64_t seed, const fs::path& out_path) {
    if (out_path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(out_path.parent_path(), ec);
    }
    save_scenario(paper_scenario(seed), out_path);
    return out_path;
}

fs::path cmd_simulate(const RunManifest& manifest, int threads) {
    const ScenarioConfig config = resolve_scenario(manifest);
    prepare_out_dir(manifest);
    const auto cohort = training_cohort(manifest, config, threads);
    const fs::path path = manifest.out_dir / "cohort.csv";
    write_cohort_csv(cohort, path);
    return path;
}

TrainResult cmd_train(const RunManifest& manifest, const std::optional<fs::path>& cohort_csv,
                      int threads) {
    const ScenarioConfig config = resolve_scenario(manifest);
    prepare_out_dir(manifest);
    const auto cohort = cohort_csv ? read_cohort_csv(*cohort_csv, config)
                                   : training_cohort(manifest, config, threads);
    const TrainingSet data = build_training_set(cohort, manifest.snapshot_stride);
    const Forest forest = train_forest(data, manifest.forest, manifest.seed, threads);
    save_forest(forest, manifest.out_dir / "model.rpf");

    TrainResult result;
    result.rows = data.rows();
    result.rare_rows = data.positives();
    result.oob_accuracy = out_of_bag_accuracy(forest, data);
    std::ostringstream summary;
    summary << "trajectories " << cohort.size() << '\n'
            << "rows " << result.rows << '\n'
            << "rare_rows " << result.rare_rows << '\n'
            << "non_rare_rows " << result.rows - result.rare_rows << '\n'
            << "features " << data.feature_count << '\n'
            << "trees " << forest.trees.size() << '\n'
            << "oob_accuracy " << fixed6(result.oob_accuracy) << '\n';
    write_text_file(manifest.out_dir / "train_summary.txt", summary.str());
    return result;
}

SweepResult cmd_sweep(const RunManifest& manifest, const std::optional<fs::path>& model_path,
                      bool write_svg, int threads) {
    const ScenarioConfig config = resolve_scenario(manifest);
    const Forest forest = load_checked_forest(manifest, model_path, config);
    prepare_out_dir(manifest);
    const auto grid = uniform_grid(manifest.grid_points);
    SweepResult result;
    result.curve = sweep_thresholds(config, forest, manifest.cost, grid, manifest.n_eval,
                                    manifest.seed, threads);
    result.optimal_tau = select_optimal_threshold(result.curve);
    write_text_file(manifest.out_dir / "cost_curve.csv", cost_curve_csv(result.curve));
    if (write_svg) {
        write_text_file(manifest.out_dir / "cost_curve.svg",
                        cost_curve_svg(result.curve, result.optimal_tau));
    }
    const auto& c = result.curve;
    std::size_t best = 0;
    while (c.taus[best] != result.optimal_tau) ++best;
    std::ostringstream summary;
    summary << "optimal_tau " << fixed6(result.optimal_tau) << '\n'
            << "optimal_mean_cost " << fixed6(c.mean_costs[best]) << '\n'
            << "send_all_mean_cost " << fixed6(c.mean_costs.front()) << '\n'
            << "send_none_mean_cost " << fixed6(c.mean_costs.back()) << '\n';
    write_text_file(manifest.out_dir / "sweep_summary.txt", summary.str());
    return result;
}

std::size_t cmd_trace(const RunManifest& manifest, const std::optional<fs::path>& model_path,
                      std::size_t trajectory_id) {
    const ScenarioConfig config = resolve_scenario(manifest);
    const Forest forest = load_checked_forest(manifest, model_path, config);
    const auto cohort = training_cohort(manifest, config, 1);
    if (trajectory_id >= cohort.size()) {
        throw std::invalid_argument("trajectory id " + std::to_string(trajectory_id) +
                                    " out of range (cohort has " + std::to_string(cohort.size()) +
                                    ")");
    }
    prepare_out_dir(manifest);
    const auto trace = prediction_trace(cohort[trajectory_id], forest);
    write_text_file(manifest.out_dir / ("trace_" + std::to_string(trajectory_id) + ".csv"),
                    trace_csv(trace));
    return trace.size();
}

// --------------------------------------------------------------------- CLI

namespace {

struct Flags {
    std::string manifest;
    std::string scenario;
    std::uint64_t seed = 42;
    std::string out = "out";
    int trees = 100;
    int max_depth = 12;
    int min_leaf = 5;
    int features_per_split = 0;
    int per_syndrome = 100;
    int stride = 30;
    int grid_points = 101;
    int n_eval = 2000;
    int threads = 1;
    int horizon = 0;
    CostParams cost;
    std::string model;
    std::string cohort;
    std::size_t trajectory = 0;
    bool no_svg = false;
};

struct Registered {
    CLI::App* app = nullptr;
    std::vector<std::pair<CLI::Option*, std::function<void(RunManifest&)>>> overrides;
};

Registered add_run_options(CLI::App* app, Flags& f) {
    Registered reg{app, {}};
    const auto track = [&](CLI::Option* opt, std::function<void(RunManifest&)> apply) {
        reg.overrides.emplace_back(opt, std::move(apply));
    };
    app->add_option("--manifest", f.manifest, "Start from a manifest.json written by a run")
        ->check(CLI::ExistingFile);
    track(app->add_option("--scenario", f.scenario, "Scenario JSON file (default: generated)"),
          [&f](RunManifest& m) { m.scenario_path = f.scenario; });
    track(app->add_option("--seed", f.seed, "Master seed"),
          [&f](RunManifest& m) { m.seed = f.seed; });
    track(app->add_option("--out", f.out, "Output directory"),
          [&f](RunManifest& m) { m.out_dir = f.out; });
    track(app->add_option("--trees", f.trees, "Number of trees")->check(CLI::PositiveNumber),
          [&f](RunManifest& m) { m.forest.tree_count = f.trees; });
    track(app->add_option("--max-depth", f.max_depth, "Maximum tree depth")
              ->check(CLI::NonNegativeNumber),
          [&f](RunManifest& m) { m.forest.max_depth = f.max_depth; });
    track(app->add_option("--min-leaf", f.min_leaf, "Minimum rows per leaf")
              ->check(CLI::PositiveNumber),
          [&f](RunManifest& m) { m.forest.min_leaf_size = f.min_leaf; });
    track(app->add_option("--features-per-split", f.features_per_split,
                          "Features tried per split (0 = ceil(sqrt(F)))")
              ->check(CLI::NonNegativeNumber),
          [&f](RunManifest& m) { m.forest.features_per_split = f.features_per_split; });
    track(app->add_option("--per-syndrome", f.per_syndrome, "Training trajectories per syndrome")
              ->check(CLI::NonNegativeNumber),
          [&f](RunManifest& m) { m.per_syndrome = f.per_syndrome; });
    track(app->add_option("--stride", f.stride, "Snapshot stride in days")
              ->check(CLI::PositiveNumber),
          [&f](RunManifest& m) { m.snapshot_stride = f.stride; });
    track(app->add_option("--grid-points", f.grid_points, "Points of the threshold grid")
              ->check(CLI::PositiveNumber),
          [&f](RunManifest& m) { m.grid_points = f.grid_points; });
    track(app->add_option("--n-eval", f.n_eval, "Evaluation trajectories")
              ->check(CLI::PositiveNumber),
          [&f](RunManifest& m) { m.n_eval = f.n_eval; });
    track(app->add_option("--horizon", f.horizon, "Override the scenario horizon (days)")
              ->check(CLI::PositiveNumber),
          [&f](RunManifest& m) { m.horizon_days = f.horizon; });
    track(app->add_option("--cost-per-day", f.cost.cost_wandering_per_day,
                          "Cost of one day of wandering"),
          [&f](RunManifest& m) { m.cost.cost_wandering_per_day = f.cost.cost_wandering_per_day; });
    track(app->add_option("--cost-specialist", f.cost.cost_specialist,
                          "Cost of a referral-center work-up"),
          [&f](RunManifest& m) { m.cost.cost_specialist = f.cost.cost_specialist; });
    track(app->add_option("--cost-non-specialist", f.cost.cost_non_specialist,
                          "Cost of one non-specialist consultation"),
          [&f](RunManifest& m) { m.cost.cost_non_specialist = f.cost.cost_non_specialist; });
    track(app->add_option("--cost-mean-wandering-days", f.cost.mean_wandering_days,
                          "Mean wandering of an unreferred rare patient (days)"),
          [&f](RunManifest& m) { m.cost.mean_wandering_days = f.cost.mean_wandering_days; });
    track(app->add_option("--cost-mean-physicians", f.cost.mean_physicians_consulted,
                          "Mean physicians consulted by an unreferred rare patient"),
          [&f](RunManifest& m) {
              m.cost.mean_physicians_consulted = f.cost.mean_physicians_consulted;
          });
    app->add_option("--threads", f.threads, "Worker threads (does not change outputs)")
        ->check(CLI::PositiveNumber);
    return reg;
}

RunManifest build_manifest(const Registered& reg, const Flags& f) {
    RunManifest m;
    if (!f.manifest.empty()) {
        m = manifest_from_json(read_file(f.manifest));
        m.tool_version = kToolVersion;
    }
    for (const auto& [opt, apply] : reg.overrides) {
        if (opt->count() > 0) apply(m);
    }
    return m;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rare-disease patient-pathway simulator and referral-threshold optimizer",
                 "rarepath"};
    app.require_subcommand(1);
    Flags f;

    auto* generate = app.add_subcommand("generate", "Write a procedurally generated scenario");
    generate->add_option("--seed", f.seed, "Generation seed");
    generate->add_option("--out", f.out, "Output directory");

    auto simulate = add_run_options(app.add_subcommand("simulate", "Simulate the training cohort"),
                                    f);
    auto train = add_run_options(app.add_subcommand("train", "Train the random forest"), f);
    train.app->add_option("--cohort", f.cohort, "Cohort CSV (default: re-simulate)");
    auto sweep = add_run_options(app.add_subcommand("sweep", "Sweep the alert threshold"), f);
    sweep.app->add_option("--model", f.model, "Model file (default: OUT/model.rpf)");
    sweep.app->add_flag("--no-svg", f.no_svg, "Skip the SVG plot");
    auto trace = add_run_options(app.add_subcommand("trace", "Per-day prediction of one patient"),
                                 f);
    trace.app->add_option("--model", f.model, "Model file (default: OUT/model.rpf)");
    trace.app->add_option("--trajectory", f.trajectory, "Trajectory index in the cohort")
        ->required();
    auto all = add_run_options(app.add_subcommand("all", "generate, simulate, train and sweep"),
                               f);
    all.app->add_flag("--no-svg", f.no_svg, "Skip the SVG plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    const auto opt_path = [](const std::string& s) -> std::optional<fs::path> {
        if (s.empty()) return std::nullopt;
        return fs::path(s);
    };

    try {
        if (generate->parsed()) {
            const auto path = cmd_generate(f.seed, fs::path(f.out) / "scenario.json");
            out << "scenario written to " << path.string() << '\n';
        } else if (simulate.app->parsed()) {
            const auto m = build_manifest(simulate, f);
            const auto path = cmd_simulate(m, f.threads);
            out << "cohort written to " << path.string() << '\n';
        } else if (train.app->parsed()) {
            const auto m = build_manifest(train, f);
            const auto r = cmd_train(m, opt_path(f.cohort), f.threads);
            out << "trained on " << r.rows << " rows (" << r.rare_rows
                << " rare), out-of-bag accuracy " << fixed6(r.oob_accuracy) << '\n';
        } else if (sweep.app->parsed()) {
            const auto m = build_manifest(sweep, f);
            const auto r = cmd_sweep(m, opt_path(f.model), !f.no_svg, f.threads);
            out << "optimal_tau " << fixed6(r.optimal_tau) << '\n';
        } else if (trace.app->parsed()) {
            const auto m = build_manifest(trace, f);
            const auto rows = cmd_trace(m, opt_path(f.model), f.trajectory);
            if (rows == 0) {
                out << "trajectory " << f.trajectory
                    << " never shows an observable symptom; the trace is empty\n";
            } else {
                out << "trace of " << rows << " days written\n";
            }
        } else if (all.app->parsed()) {
            const auto m = build_manifest(all, f);
            if (!m.scenario_path) {
                fs::create_directories(m.out_dir);
                cmd_generate(m.seed, m.out_dir / "scenario.json");
            }
            cmd_simulate(m, f.threads);
            const auto r = cmd_train(m, std::nullopt, f.threads);
            out << "trained on " << r.rows << " rows (" << r.rare_rows
                << " rare), out-of-bag accuracy " << fixed6(r.oob_accuracy) << '\n';
            const auto s = cmd_sweep(m, std::nullopt, !f.no_svg, f.threads);
            out << "optimal_tau " << fixed6(s.optimal_tau) << '\n';
        }
    } catch (const ScenarioValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const ScenarioParseError& e) {
        err << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const FormatError& e) {
        err << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const std::out_of_range& e) {
        err << "validation error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace rarepath::cli
