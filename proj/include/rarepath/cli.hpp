#pragma once

#include "rarepath/learner.hpp"
#include "rarepath/policy.hpp"
#include "rarepath/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace rarepath::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Everything that determines the bytes of a run. The thread count is not
/// part of it: outputs are identical for any number of threads.
struct RunManifest {
    std::optional<std::filesystem::path> scenario_path;  // else paper_scenario(seed)
    std::uint64_t seed = 42;
    int per_syndrome = 100;
    int snapshot_stride = 30;
    std::optional<int> horizon_days;  // overrides the scenario horizon
    ForestParams forest;
    CostParams cost;
    int grid_points = 101;
    int n_eval = 2000;
    std::filesystem::path out_dir = "out";
    std::string tool_version = kToolVersion;

    bool operator==(const RunManifest&) const = default;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

/// Scenario named by the manifest (loaded or generated), with the horizon
/// override applied and validated.
ScenarioConfig resolve_scenario(const RunManifest& manifest);

struct TrainResult {
    std::size_t rows = 0;
    std::size_t rare_rows = 0;
    double oob_accuracy = 0.0;
};

struct SweepResult {
    CostCurve curve;
    double optimal_tau = 0.0;
};

// Pipeline stages. Each writes into manifest.out_dir (created if missing)
// together with manifest.json.
std::filesystem::path cmd_generate(std::uint64_t seed, const std::filesystem::path& out_path);
std::filesystem::path cmd_simulate(const RunManifest& manifest, int threads);
TrainResult cmd_train(const RunManifest& manifest,
                      const std::optional<std::filesystem::path>& cohort_csv, int threads);
SweepResult cmd_sweep(const RunManifest& manifest,
                      const std::optional<std::filesystem::path>& model_path, bool write_svg,
                      int threads);
/// Returns the number of trace rows; 0 when the trajectory never shows a
/// symptom.
std::size_t cmd_trace(const RunManifest& manifest,
                      const std::optional<std::filesystem::path>& model_path,
                      std::size_t trajectory_id);

/// Entry point. Exit codes: 0 success, 1 validation error, 2 I/O error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rarepath::cli
