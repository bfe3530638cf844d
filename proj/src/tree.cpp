#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "ecmkit/circuit.hpp"
#include "ecmkit/error.hpp"
#include "ecmkit/metrics.hpp"
#include "ecmkit/model.hpp"

namespace ecmkit {

LabelEncoding LabelEncoding::fit(std::span<const std::string> labels) {
    std::vector<std::string> present(labels.begin(), labels.end());
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());

    LabelEncoding enc;
    for (const auto& name : predefined_circuits()) {
        if (std::binary_search(present.begin(), present.end(), name)) enc.classes.push_back(name);
    }
    for (const auto& name : present) {
        if (std::find(enc.classes.begin(), enc.classes.end(), name) == enc.classes.end()) enc.classes.push_back(name);
    }
    return enc;
}

int LabelEncoding::index_of(const std::string& label) const {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw Error(ErrorCode::UnknownLabel, fmt::format("label '{}' is not a known class", label));
    return static_cast<int>(it - classes.begin());
}

std::vector<int> LabelEncoding::encode(std::span<const std::string> labels) const {
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(index_of(l));
    return out;
}

int DecisionTree::add_node(std::span<const double> payload) {
    nodes_.push_back({});
    values_.insert(values_.end(), payload.begin(), payload.end());
    values_.resize(nodes_.size() * width_, 0.0);
    return static_cast<int>(nodes_.size() - 1);
}

void DecisionTree::split(int node, int feature, double threshold, int left, int right) {
    auto& n = nodes_.at(static_cast<std::size_t>(node));
    n.feature = feature;
    n.threshold = threshold;
    n.left = left;
    n.right = right;
}

void DecisionTree::set_payload(int node, std::span<const double> payload) {
    std::copy(payload.begin(), payload.end(), values_.begin() + static_cast<std::ptrdiff_t>(node) * static_cast<std::ptrdiff_t>(width_));
}

int DecisionTree::leaf_for(std::span<const double> x) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& n = nodes_[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return node;
}

std::vector<int> DecisionTree::used_features() const {
    std::vector<int> out;
    for (const auto& n : nodes_) {
        if (n.feature >= 0) out.push_back(n.feature);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

DecisionTree DecisionTree::from_arrays(std::size_t width, std::vector<TreeNode> nodes, std::vector<double> values) {
    if (width == 0 || values.size() != nodes.size() * width) {
        throw Error(ErrorCode::ParseError, "tree payload size does not match node count");
    }
    const auto count = static_cast<int>(nodes.size());
    for (const auto& n : nodes) {
        if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count)) {
            throw Error(ErrorCode::ParseError, "tree node has a missing child");
        }
    }
    DecisionTree t(width);
    t.nodes_ = std::move(nodes);
    t.values_ = std::move(values);
    return t;
}

namespace detail {

DecisionTree grow_classification_tree(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                                      std::vector<std::size_t> rows, const ClassificationTreeParams& params,
                                      Rng& rng) {
    const std::size_t n_features = X.cols();
    const std::size_t max_features =
        params.max_features == 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(n_features))))
                                 : std::min(params.max_features, n_features);
    const std::size_t min_leaf = std::max<std::size_t>(1, params.min_samples_leaf);

    DecisionTree tree(n_classes);
    struct Pending {
        int node;
        std::vector<std::size_t> rows;
        std::size_t depth;
    };
    std::vector<Pending> stack;
    stack.push_back({tree.add_node(std::vector<double>(n_classes, 0.0)), std::move(rows), 0});

    std::vector<int> feature_order(n_features);
    std::vector<std::pair<double, int>> sorted;
    std::vector<double> left_counts(n_classes), right_counts(n_classes), total_counts(n_classes);

    while (!stack.empty()) {
        Pending item = std::move(stack.back());
        stack.pop_back();
        const std::size_t n = item.rows.size();

        std::fill(total_counts.begin(), total_counts.end(), 0.0);
        for (auto r : item.rows) total_counts[static_cast<std::size_t>(y[r])] += 1.0;
        std::vector<double> histogram(total_counts);
        for (auto& v : histogram) v /= static_cast<double>(n);
        tree.set_payload(item.node, histogram);

        const bool pure = std::count_if(total_counts.begin(), total_counts.end(), [](double c) { return c > 0; }) <= 1;
        const bool depth_limited = params.max_depth != 0 && item.depth >= params.max_depth;
        if (pure || depth_limited || n < 2 * min_leaf) continue;

        std::iota(feature_order.begin(), feature_order.end(), 0);
        shuffle(std::span<int>(feature_order), rng);

        // Best split as (score, feature, threshold); higher score wins, then
        // lower feature index, then lower threshold.
        double best_score = -1.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::size_t visited = 0;
        for (int f : feature_order) {
            if (visited >= max_features) break;
            sorted.clear();
            for (auto r : item.rows) sorted.emplace_back(X(r, static_cast<std::size_t>(f)), y[r]);
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front().first == sorted.back().first) continue;
            ++visited;

            std::fill(left_counts.begin(), left_counts.end(), 0.0);
            right_counts = total_counts;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto c = static_cast<std::size_t>(sorted[i].second);
                left_counts[c] += 1.0;
                right_counts[c] -= 1.0;
                if (sorted[i].first == sorted[i + 1].first) continue;
                const std::size_t n_left = i + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                double sum_left = 0.0, sum_right = 0.0;
                for (std::size_t k = 0; k < n_classes; ++k) {
                    sum_left += left_counts[k] * left_counts[k];
                    sum_right += right_counts[k] * right_counts[k];
                }
                // Maximizing this minimizes the weighted Gini impurity.
                const double score = sum_left / double(n_left) + sum_right / double(n_right);
                const double threshold = sorted[i].first;
                const bool better = score > best_score ||
                                    (score == best_score && (f < best_feature ||
                                                             (f == best_feature && threshold < best_threshold)));
                if (better) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = threshold;
                }
            }
        }
        if (best_feature < 0) continue;

        std::vector<std::size_t> left_rows, right_rows;
        for (auto r : item.rows) {
            (X(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows : right_rows).push_back(r);
        }
        item.rows.clear();
        item.rows.shrink_to_fit();
        const std::vector<double> zeros(n_classes, 0.0);
        const int left = tree.add_node(zeros);
        const int right = tree.add_node(zeros);
        tree.split(item.node, best_feature, best_threshold, left, right);
        stack.push_back({right, std::move(right_rows), item.depth + 1});
        stack.push_back({left, std::move(left_rows), item.depth + 1});
    }
    return tree;
}

}  // namespace detail

std::vector<int> argmax_rows(const Matrix& proba) {
    std::vector<int> out(proba.rows());
    for (std::size_t r = 0; r < proba.rows(); ++r) {
        const auto row = proba.row(r);
        out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

std::vector<bool> stratified_split(std::span<const int> y, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "test fraction must lie in (0, 1)");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
    std::vector<bool> test(y.size(), false);
    for (auto& [label, rows] : by_class) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
        shuffle(std::span<std::size_t>(rows), rng);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
        for (std::size_t i = 0; i < n_test; ++i) test[rows[i]] = true;
    }
    return test;
}

std::vector<double> permutation_importance(const PredictFn& predict_fn, const Matrix& X, std::span<const int> y,
                                           std::size_t n_classes, std::size_t repeats, std::uint64_t seed) {
    if (X.rows() != y.size()) throw Error(ErrorCode::ShapeMismatch, "one label per row required");
    auto weighted_f1 = [&](const std::vector<int>& predicted) {
        return scores(confusion(y, predicted, n_classes)).f1_weighted;
    };
    const double baseline = weighted_f1(predict_fn(X));
    std::vector<double> importance(X.cols(), 0.0);
    for (std::size_t f = 0; f < X.cols(); ++f) {
        Rng rng(derive_seed(seed, f));
        double drop = 0.0;
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            auto column = X.column(f);
            shuffle(std::span<double>(column), rng);
            Matrix shuffled = X;
            for (std::size_t r = 0; r < X.rows(); ++r) shuffled(r, f) = column[r];
            drop += baseline - weighted_f1(predict_fn(shuffled));
        }
        importance[f] = repeats == 0 ? 0.0 : drop / static_cast<double>(repeats);
    }
    return importance;
}

}  // namespace ecmkit
