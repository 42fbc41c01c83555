#include "rarepath/learner.hpp"

#include "rarepath/parallel.hpp"
#include "rarepath/rng.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rarepath {

// ---------------------------------------------------------------- features

std::vector<double> FeatureVector::to_row() const {
    std::vector<double> row;
    row.reserve(feature_count_for(ever_observed.size()));
    for (auto v : ever_observed) row.push_back(v ? 1.0 : 0.0);
    for (auto v : days_since_first) row.push_back(static_cast<double>(v));
    row.push_back(static_cast<double>(elapsed_days));
    row.push_back(static_cast<double>(active_count));
    return row;
}

FeatureVector extract_features(const ObservationHistory& history) {
    if (!history.first_observed_day) {
        throw std::invalid_argument("extract_features: no symptom observed before day " +
                                    std::to_string(history.t));
    }
    const int first = *history.first_observed_day;
    FeatureVector fv;
    const auto n = history.days_observed.size();
    fv.ever_observed.assign(n, 0);
    fv.days_since_first.assign(n, FeatureVector::kNeverObserved);
    for (std::size_t s = 0; s < n; ++s) {
        const auto& days = history.days_observed[s];
        if (days.empty()) continue;
        fv.ever_observed[s] = 1;
        fv.days_since_first[s] = days.front() - first;
        if (days.back() == history.t - 1) ++fv.active_count;
    }
    fv.elapsed_days = history.t - first;
    return fv;
}

FeatureStream::FeatureStream(const Trajectory& trajectory)
    : trajectory_{&trajectory},
      symptoms_{trajectory.observed.size()},
      first_day_{trajectory.first_observed_day.value_or(-1)},
      next_day_{first_day_},
      row_(feature_count_for(symptoms_), 0.0) {
    if (first_day_ < 0) {
        throw std::invalid_argument("FeatureStream: trajectory has no observed symptom");
    }
    std::fill(row_.begin() + static_cast<std::ptrdiff_t>(symptoms_),
              row_.begin() + static_cast<std::ptrdiff_t>(2 * symptoms_),
              static_cast<double>(FeatureVector::kNeverObserved));
}

std::span<const double> FeatureStream::advance(int day) {
    if (day < first_day_ || day < next_day_ - 1 || day >= trajectory_->horizon_days) {
        throw std::out_of_range("FeatureStream::advance: day " + std::to_string(day) +
                                " is out of sequence");
    }
    for (; next_day_ <= day; ++next_day_) {
        const auto d = static_cast<std::size_t>(next_day_);
        for (std::size_t s = 0; s < symptoms_; ++s) {
            if (trajectory_->observed[s][d] && row_[s] == 0.0) {
                row_[s] = 1.0;
                row_[symptoms_ + s] = static_cast<double>(next_day_ - first_day_);
            }
        }
    }
    int active = 0;
    const auto d = static_cast<std::size_t>(day);
    for (std::size_t s = 0; s < symptoms_; ++s) active += trajectory_->observed[s][d] ? 1 : 0;
    row_[2 * symptoms_] = static_cast<double>(day + 1 - first_day_);
    row_[2 * symptoms_ + 1] = static_cast<double>(active);
    return row_;
}

// ------------------------------------------------------------ training set

void TrainingSet::add(std::span<const double> row, bool label) {
    if (row.size() != feature_count) {
        throw std::invalid_argument("TrainingSet::add: row has " + std::to_string(row.size()) +
                                    " features, expected " + std::to_string(feature_count));
    }
    features.insert(features.end(), row.begin(), row.end());
    labels.push_back(label ? 1 : 0);
}

std::size_t TrainingSet::positives() const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

std::vector<int> snapshot_days(const Trajectory& trajectory, int stride) {
    if (stride < 1) throw std::invalid_argument("snapshot stride must be >= 1");
    std::vector<int> days;
    if (!trajectory.first_observed_day) return days;
    const int first = *trajectory.first_observed_day;
    for (const auto& timeline : trajectory.observed) {
        auto it = std::find(timeline.begin(), timeline.end(), std::uint8_t{1});
        if (it != timeline.end()) days.push_back(static_cast<int>(it - timeline.begin()));
    }
    for (long long d = first; d < trajectory.horizon_days; d += stride) {
        days.push_back(static_cast<int>(d));
    }
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());
    return days;
}

TrainingSet build_training_set(const std::vector<Trajectory>& cohort, int stride) {
    if (stride < 1) throw std::invalid_argument("snapshot stride must be >= 1");
    TrainingSet set;
    set.feature_count = cohort.empty() ? 0 : feature_count_for(cohort.front().observed.size());
    for (const auto& traj : cohort) {
        const auto days = snapshot_days(traj, stride);
        if (days.empty()) continue;
        FeatureStream stream(traj);
        for (int day : days) set.add(stream.advance(day), traj.is_rare);
    }
    return set;
}

// ------------------------------------------------------------------ forest

namespace {

// Leaf values sit on a 2^-32 grid, so a sum over up to 2^21 trees is exact
// in double and the forest mean does not depend on tree order.
double quantize_fraction(std::size_t positives, std::size_t n) {
    constexpr double kScale = 4294967296.0;
    const double frac = static_cast<double>(positives) / static_cast<double>(n);
    return std::round(frac * kScale) / kScale;
}

std::vector<std::uint32_t> bootstrap_sample(Rng& rng, std::size_t n) {
    std::vector<std::uint32_t> idx(n);
    for (auto& i : idx) i = static_cast<std::uint32_t>(rng.below(n));
    return idx;
}

// Sum over children of n_child * gini(child), with gini = 2p(1-p).
double weighted_gini(double pos, double n) {
    return n > 0.0 ? 2.0 * pos * (n - pos) / n : 0.0;
}

class TreeBuilder {
public:
    TreeBuilder(const TrainingSet& data, const ForestParams& params, Rng& rng)
        : data_{data}, params_{params}, rng_{rng}, candidates_(data.feature_count) {
        std::iota(candidates_.begin(), candidates_.end(), 0);
    }

    DecisionTree build(std::vector<std::uint32_t> indices) {
        grow(indices, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = 0.0;
    };

    int grow(std::vector<std::uint32_t>& idx, int depth) {
        const std::size_t n = idx.size();
        std::size_t pos = 0;
        for (auto i : idx) pos += data_.labels[i];
        const int node = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({-1, 0.0, -1, -1, quantize_fraction(pos, n)});

        const auto min_leaf = static_cast<std::size_t>(params_.min_leaf_size);
        if (depth >= params_.max_depth || pos == 0 || pos == n || n < 2 * min_leaf) return node;

        const double parent = weighted_gini(static_cast<double>(pos), static_cast<double>(n));
        Split best = best_split(idx, parent);
        if (best.feature < 0) return node;

        std::vector<std::uint32_t> left;
        std::vector<std::uint32_t> right;
        for (auto i : idx) {
            (data_.row(i)[static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right)
                .push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& self = tree_.nodes[static_cast<std::size_t>(node)];
        self.feature = best.feature;
        self.threshold = best.threshold;
        self.left = l;
        self.right = r;
        return node;
    }

    Split best_split(const std::vector<std::uint32_t>& idx, double parent) {
        const std::size_t n_features = candidates_.size();
        const auto k = static_cast<std::size_t>(params_.features_per_split);
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(candidates_[i], candidates_[i + rng_.below(n_features - i)]);
        }
        std::vector<int> chosen(candidates_.begin(),
                                candidates_.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(chosen.begin(), chosen.end());

        const std::size_t n = idx.size();
        const auto min_leaf = static_cast<std::size_t>(params_.min_leaf_size);
        std::size_t total_pos = 0;
        for (auto i : idx) total_pos += data_.labels[i];

        Split best;
        best.score = parent * (1.0 - 1e-12);
        for (int f : chosen) {
            scratch_.clear();
            for (auto i : idx) {
                scratch_.emplace_back(data_.row(i)[static_cast<std::size_t>(f)], data_.labels[i]);
            }
            std::sort(scratch_.begin(), scratch_.end());
            std::size_t left_pos = 0;
            for (std::size_t j = 0; j + 1 < n; ++j) {
                left_pos += scratch_[j].second;
                const std::size_t n_left = j + 1;
                if (n_left < min_leaf) continue;
                if (n - n_left < min_leaf) break;
                const double lo = scratch_[j].first;
                const double hi = scratch_[j + 1].first;
                if (!(lo < hi)) continue;
                const double score =
                    weighted_gini(static_cast<double>(left_pos), static_cast<double>(n_left)) +
                    weighted_gini(static_cast<double>(total_pos - left_pos),
                                  static_cast<double>(n - n_left));
                if (score < best.score) {
                    double threshold = lo + 0.5 * (hi - lo);
                    if (!(threshold < hi)) threshold = lo;
                    best = {f, threshold, score};
                }
            }
        }
        return best;
    }

    const TrainingSet& data_;
    const ForestParams& params_;
    Rng& rng_;
    DecisionTree tree_;
    std::vector<int> candidates_;
    std::vector<std::pair<double, std::uint8_t>> scratch_;
};

ForestParams resolve_params(const ForestParams& params, std::size_t feature_count) {
    if (params.tree_count < 1) throw std::invalid_argument("tree_count must be >= 1");
    if (params.max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
    if (params.min_leaf_size < 1) throw std::invalid_argument("min_leaf_size must be >= 1");
    if (params.features_per_split < 0) {
        throw std::invalid_argument("features_per_split must be >= 0 (0 = automatic)");
    }
    ForestParams resolved = params;
    if (resolved.features_per_split == 0) {
        resolved.features_per_split =
            static_cast<int>(std::ceil(std::sqrt(static_cast<double>(feature_count))));
    }
    resolved.features_per_split =
        std::min(resolved.features_per_split, static_cast<int>(feature_count));
    return resolved;
}

}  // namespace

double DecisionTree::predict(std::span<const double> row) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf()) {
        const int next =
            row[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                            : node->right;
        node = &nodes[static_cast<std::size_t>(next)];
    }
    return node->value;
}

Forest train_forest(const TrainingSet& data, const ForestParams& params, std::uint64_t seed,
                    int threads) {
    if (data.feature_count == 0) throw std::invalid_argument("training set has no features");
    const std::size_t pos = data.positives();
    if (data.rows() == 0 || pos == 0 || pos == data.rows()) {
        throw std::invalid_argument(
            "training set needs both rare and non-rare rows (got " + std::to_string(pos) +
            " rare of " + std::to_string(data.rows()) + ")");
    }
    Forest forest;
    forest.params = resolve_params(params, data.feature_count);
    forest.seed = seed;
    forest.feature_count = data.feature_count;
    forest.trees.resize(static_cast<std::size_t>(forest.params.tree_count));
    parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
        Rng rng = Rng::derive(seed, t, StreamTag::Tree);
        auto sample = bootstrap_sample(rng, data.rows());
        TreeBuilder builder(data, forest.params, rng);
        forest.trees[t] = builder.build(std::move(sample));
    });
    return forest;
}

double predict_proba(const Forest& forest, std::span<const double> row) {
    if (row.size() != forest.feature_count) {
        throw std::invalid_argument("predict_proba: got " + std::to_string(row.size()) +
                                    " features, forest expects " +
                                    std::to_string(forest.feature_count));
    }
    if (forest.trees.empty()) throw std::invalid_argument("predict_proba: empty forest");
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.predict(row);
    return sum / static_cast<double>(forest.trees.size());
}

double predict_proba(const Forest& forest, const FeatureVector& features) {
    const auto row = features.to_row();
    return predict_proba(forest, std::span<const double>(row));
}

double out_of_bag_accuracy(const Forest& forest, const TrainingSet& data) {
    const std::size_t n = data.rows();
    std::vector<double> votes(n, 0.0);
    std::vector<int> voters(n, 0);
    std::vector<std::uint8_t> in_bag(n);
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        Rng rng = Rng::derive(forest.seed, t, StreamTag::Tree);
        std::fill(in_bag.begin(), in_bag.end(), std::uint8_t{0});
        for (auto i : bootstrap_sample(rng, n)) in_bag[i] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (in_bag[i]) continue;
            votes[i] += forest.trees[t].predict(data.row(i));
            ++voters[i];
        }
    }
    std::size_t counted = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (voters[i] == 0) continue;
        ++counted;
        const bool predicted = votes[i] / voters[i] > 0.5;
        correct += predicted == (data.labels[i] != 0) ? 1 : 0;
    }
    return counted ? static_cast<double>(correct) / static_cast<double>(counted) : 0.0;
}

// --------------------------------------------------------------- persistence

namespace {

constexpr const char* kMagic = "rarepath-forest";
constexpr int kFormatVersion = 1;

std::string hex_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hex_double(const std::string& token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
        throw FormatError("model file: bad number '" + token + "'");
    }
    return v;
}

template <class T>
T read_keyed(std::istream& in, const char* key) {
    std::string name;
    T value{};
    if (!(in >> name >> value) || name != key) {
        throw FormatError(std::string("model file: expected '") + key + "'");
    }
    return value;
}

}  // namespace

std::string forest_to_text(const Forest& forest) {
    std::ostringstream os;
    os << kMagic << ' ' << kFormatVersion << '\n';
    os << "feature_count " << forest.feature_count << '\n';
    os << "tree_count " << forest.params.tree_count << '\n';
    os << "max_depth " << forest.params.max_depth << '\n';
    os << "min_leaf_size " << forest.params.min_leaf_size << '\n';
    os << "features_per_split " << forest.params.features_per_split << '\n';
    os << "seed " << forest.seed << '\n';
    for (const auto& tree : forest.trees) {
        os << "tree " << tree.nodes.size() << '\n';
        for (const auto& node : tree.nodes) {
            os << node.feature << ' ' << hex_double(node.threshold) << ' ' << node.left << ' '
               << node.right << ' ' << hex_double(node.value) << '\n';
        }
    }
    os << "end\n";
    return os.str();
}

Forest forest_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) {
        throw FormatError("model file: missing rarepath-forest header");
    }
    if (version != kFormatVersion) {
        throw FormatError("model file: unsupported version " + std::to_string(version));
    }
    Forest forest;
    forest.feature_count = read_keyed<std::size_t>(in, "feature_count");
    forest.params.tree_count = read_keyed<int>(in, "tree_count");
    forest.params.max_depth = read_keyed<int>(in, "max_depth");
    forest.params.min_leaf_size = read_keyed<int>(in, "min_leaf_size");
    forest.params.features_per_split = read_keyed<int>(in, "features_per_split");
    forest.seed = read_keyed<std::uint64_t>(in, "seed");
    if (forest.params.tree_count < 1) throw FormatError("model file: tree_count must be >= 1");
    for (int t = 0; t < forest.params.tree_count; ++t) {
        const auto count = read_keyed<std::size_t>(in, "tree");
        if (count == 0) throw FormatError("model file: empty tree");
        DecisionTree tree;
        tree.nodes.resize(count);
        for (std::size_t k = 0; k < count; ++k) {
            auto& node = tree.nodes[k];
            const auto self = static_cast<int>(k);
            std::string threshold;
            std::string value;
            if (!(in >> node.feature >> threshold >> node.left >> node.right >> value)) {
                throw FormatError("model file: truncated node list");
            }
            node.threshold = parse_hex_double(threshold);
            node.value = parse_hex_double(value);
            const auto n = static_cast<int>(count);
            if (node.feature < -1 || node.feature >= static_cast<int>(forest.feature_count) ||
                (!node.is_leaf() &&
                 (node.left <= self || node.left >= n || node.right <= self || node.right >= n)) ||
                !(node.value >= 0.0 && node.value <= 1.0)) {
                throw FormatError("model file: inconsistent node");
            }
        }
        forest.trees.push_back(std::move(tree));
    }
    std::string end;
    if (!(in >> end) || end != "end") throw FormatError("model file: missing end marker");
    return forest;
}

void save_forest(const Forest& forest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file '" + path.string() + "'");
    out << forest_to_text(forest);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Forest load_forest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return forest_from_text(buffer.str());
}

}  // namespace rarepath
