#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecmkit/matrix.hpp"
#include "ecmkit/random.hpp"

namespace ecmkit {

/// Class-name <-> index mapping shared by training and evaluation.
struct LabelEncoding {
    std::vector<std::string> classes;

    /// Known circuit names first in table order, anything else sorted after.
    static LabelEncoding fit(std::span<const std::string> labels);
    int index_of(const std::string& label) const;  // throws UnknownLabel
    std::vector<int> encode(std::span<const std::string> labels) const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
};

/// Binary tree with a fixed-width payload per node (class histogram for
/// forests, one leaf weight for boosting). Thresholds are training values,
/// so predictions only depend on the ordering of each feature.
class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::size_t width) : width_(width) {}

    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& values() const noexcept { return values_; }

    int add_node(std::span<const double> payload);
    void split(int node, int feature, double threshold, int left, int right);
    void set_payload(int node, std::span<const double> payload);

    int leaf_for(std::span<const double> x) const;
    std::span<const double> payload(int node) const {
        return {values_.data() + static_cast<std::size_t>(node) * width_, width_};
    }
    std::span<const double> predict(std::span<const double> x) const { return payload(leaf_for(x)); }

    /// Features used by at least one split.
    std::vector<int> used_features() const;

    static DecisionTree from_arrays(std::size_t width, std::vector<TreeNode> nodes, std::vector<double> values);

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::size_t width_ = 1;
    std::vector<TreeNode> nodes_;
    std::vector<double> values_;
};

/// What the model consumes, so a saved model can rebuild its own inputs.
struct ModelInput {
    enum class Kind { RawMaxReal, Features };
    Kind kind = Kind::RawMaxReal;
    std::size_t grid_points = 30;
    double grid_fmin = 1e1;
    double grid_fmax = 1e5;
    bool normalized = false;  // Features only: spectra scaled by max real part first

    friend bool operator==(const ModelInput&, const ModelInput&) = default;
};

struct ForestConfig {
    std::size_t n_trees = 300;
    std::size_t max_depth = 0;  // 0: unlimited
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0: floor(sqrt(n_features))
    bool bootstrap = true;
    std::uint64_t seed = 42;

    void validate() const;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;
    ModelInput input;
    ForestConfig config;
};

struct GbtConfig {
    std::size_t n_rounds = 200;
    std::size_t max_depth = 6;
    double learning_rate = 0.1;
    double lambda = 1.0;
    double min_child_weight = 1.0;
    double row_subsample = 0.8;
    double col_subsample = 1.0;
    std::uint64_t seed = 42;

    void validate() const;
};

struct GbtModel {
    /// trees[round * n_classes + k] is the round's regression tree for class k.
    std::vector<DecisionTree> trees;
    std::vector<double> base_scores;
    double learning_rate = 0.1;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;
    ModelInput input;
    GbtConfig config;

    std::size_t n_rounds() const noexcept { return n_classes == 0 ? 0 : trees.size() / n_classes; }
};

/// CART on bootstrap samples with Gini splits. Trees are grown from
/// derive_seed(config.seed, tree_index), so `jobs` does not change the model.
ForestModel train_random_forest(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                                const ForestConfig& config, int jobs = 1);

/// Softmax boosting with second-order leaf weights -G/(H + lambda) and exact
/// greedy splits on presorted features. `loss_history`, when given,
/// receives the training log-loss after each round.
GbtModel train_gbt(const Matrix& X, std::span<const int> y, std::size_t n_classes, const GbtConfig& config,
                   int jobs = 1, std::vector<double>* loss_history = nullptr);

Matrix predict_proba(const ForestModel& model, const Matrix& X);
Matrix predict_proba(const GbtModel& model, const Matrix& X);
Matrix predict_scores(const GbtModel& model, const Matrix& X);

/// Row-wise argmax (lowest index wins ties).
std::vector<int> argmax_rows(const Matrix& proba);

std::vector<int> predict(const ForestModel& model, const Matrix& X);
std::vector<int> predict(const GbtModel& model, const Matrix& X);

using PredictFn = std::function<std::vector<int>(const Matrix&)>;

/// Mean drop in weighted F1 over `repeats` shuffles of each column.
std::vector<double> permutation_importance(const PredictFn& predict_fn, const Matrix& X, std::span<const int> y,
                                           std::size_t n_classes, std::size_t repeats, std::uint64_t seed);

/// Stratified split: within each class, a seeded shuffle assigns
/// round(test_fraction * count) rows to the test set. Returns a test mask.
std::vector<bool> stratified_split(std::span<const int> y, double test_fraction, std::uint64_t seed);

// Versioned JSON model files.
std::string serialize(const ForestModel& model);
std::string serialize(const GbtModel& model);

struct LoadedModel {
    bool is_forest = true;
    ForestModel forest;
    GbtModel gbt;

    const std::vector<std::string>& class_names() const { return is_forest ? forest.class_names : gbt.class_names; }
    const std::vector<std::string>& feature_names() const {
        return is_forest ? forest.feature_names : gbt.feature_names;
    }
    const ModelInput& input() const { return is_forest ? forest.input : gbt.input; }
    Matrix predict_proba(const Matrix& X) const;
};

LoadedModel deserialize_model(const std::string& text);

namespace detail {

struct ClassificationTreeParams {
    std::size_t max_depth = 0;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;
};

/// Grows one Gini tree on `rows` (duplicates allowed, as in a bootstrap).
DecisionTree grow_classification_tree(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                                      std::vector<std::size_t> rows, const ClassificationTreeParams& params,
                                      Rng& rng);

/// Throws EmptyMatrix, ShapeMismatch, UnknownLabel or DegenerateLabels.
void check_training_data(const Matrix& X, std::span<const int> y, std::size_t n_classes);
void check_predict_shape(const Matrix& X, std::size_t n_features);

}  // namespace detail

}  // namespace ecmkit
