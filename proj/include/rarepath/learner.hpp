#pragma once

#include "rarepath/errors.hpp"
#include "rarepath/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rarepath {

/// Predictor input built from an observation history. Flattened layout (see
/// to_row): ever_observed[0..S), days_since_first[0..S), elapsed_days,
/// active_count.
struct FeatureVector {
    std::vector<std::uint8_t> ever_observed;
    std::vector<int> days_since_first;  // -1 when never observed
    int elapsed_days = 0;
    int active_count = 0;

    static constexpr int kNeverObserved = -1;

    std::vector<double> to_row() const;
    bool operator==(const FeatureVector&) const = default;
};

constexpr std::size_t feature_count_for(std::size_t symptom_count) noexcept {
    return 2 * symptom_count + 2;
}

/// Throws std::invalid_argument when nothing has been observed yet.
FeatureVector extract_features(const ObservationHistory& history);

/// Feature rows of a trajectory computed day by day without rebuilding the
/// history. advance(d) folds in the observations of day d and returns the row
/// for history_at(traj, d + 1). Days must be non-decreasing and not earlier
/// than the first observed day.
class FeatureStream {
public:
    explicit FeatureStream(const Trajectory& trajectory);

    std::span<const double> advance(int day);

private:
    const Trajectory* trajectory_;
    std::size_t symptoms_;
    int first_day_;
    int next_day_;
    std::vector<double> row_;
};

struct TrainingSet {
    std::size_t feature_count = 0;
    std::vector<double> features;      // row-major, rows() * feature_count
    std::vector<std::uint8_t> labels;  // 1 = rare

    std::size_t rows() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * feature_count, feature_count};
    }
    void add(std::span<const double> row, bool label);
    std::size_t positives() const noexcept;
};

/// Snapshot days of one trajectory: each day a new symptom is first observed,
/// plus first_observed_day + k * stride for every k with the day < horizon.
/// Sorted, unique; empty when nothing is ever observed.
std::vector<int> snapshot_days(const Trajectory& trajectory, int stride);

/// One row per snapshot day d, holding the features of history_at(traj, d+1)
/// and the syndrome's rarity as the label. Throws if stride < 1.
TrainingSet build_training_set(const std::vector<Trajectory>& cohort, int stride);

struct ForestParams {
    int tree_count = 100;
    int max_depth = 12;
    int min_leaf_size = 5;
    int features_per_split = 0;  // 0 selects ceil(sqrt(feature_count))

    bool operator==(const ForestParams&) const = default;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;   // taken when x[feature] <= threshold
    int right = -1;
    double value = 0.0;  // positive fraction of the training rows in the node

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const;
    bool operator==(const DecisionTree&) const = default;
};

struct Forest {
    ForestParams params;
    std::uint64_t seed = 0;
    std::size_t feature_count = 0;
    std::vector<DecisionTree> trees;

    bool operator==(const Forest&) const = default;
};

/// Bagged CART trees with Gini splits over a random feature subset per node.
/// Tree i draws its bootstrap and feature subsets from
/// Rng::derive(seed, i, Tree), so the forest is the same for any thread count.
/// Throws std::invalid_argument on single-class data or bad parameters.
Forest train_forest(const TrainingSet& data, const ForestParams& params, std::uint64_t seed,
                    int threads = 1);

/// Mean leaf value over the trees. Throws std::invalid_argument on a
/// dimension mismatch.
double predict_proba(const Forest& forest, std::span<const double> row);
double predict_proba(const Forest& forest, const FeatureVector& features);

/// Accuracy at the 0.5 cut of the out-of-bag vote, over rows that are
/// out-of-bag for at least one tree. `data` must be the training set.
double out_of_bag_accuracy(const Forest& forest, const TrainingSet& data);

std::string forest_to_text(const Forest& forest);
Forest forest_from_text(const std::string& text);
void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace rarepath
