#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "ecmkit/error.hpp"
#include "ecmkit/model.hpp"
#include "ecmkit/parallel.hpp"

namespace ecmkit {

void ForestConfig::validate() const {
    if (n_trees == 0) throw Error(ErrorCode::InvalidConfig, "forest needs at least one tree");
    if (min_samples_leaf == 0) throw Error(ErrorCode::InvalidConfig, "min_samples_leaf must be positive");
}

namespace detail {

void check_training_data(const Matrix& X, std::span<const int> y, std::size_t n_classes) {
    if (X.rows() == 0 || X.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "training matrix is empty");
    if (X.rows() != y.size()) {
        throw Error(ErrorCode::ShapeMismatch, fmt::format("{} rows but {} labels", X.rows(), y.size()));
    }
    std::set<int> present;
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
            throw Error(ErrorCode::UnknownLabel, fmt::format("label {} outside [0, {})", label, n_classes));
        }
        present.insert(label);
    }
    if (present.size() < 2) throw Error(ErrorCode::DegenerateLabels, "training data holds fewer than two classes");
}

void check_predict_shape(const Matrix& X, std::size_t n_features) {
    if (X.cols() != n_features) {
        throw Error(ErrorCode::ShapeMismatch,
                    fmt::format("model expects {} features but input has {}", n_features, X.cols()));
    }
}

}  // namespace detail

ForestModel train_random_forest(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                                const ForestConfig& config, int jobs) {
    config.validate();
    detail::check_training_data(X, y, n_classes);

    ForestModel model;
    model.n_classes = n_classes;
    model.n_features = X.cols();
    model.config = config;
    model.trees.resize(config.n_trees);

    const detail::ClassificationTreeParams params{config.max_depth, config.min_samples_leaf, config.max_features};
    const std::size_t n = X.rows();
    parallel_for(config.n_trees, jobs, [&](std::size_t t) {
        Rng rng(derive_seed(config.seed, t));
        std::vector<std::size_t> rows(n);
        if (config.bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n - 1)));
        } else {
            for (std::size_t i = 0; i < n; ++i) rows[i] = i;
        }
        model.trees[t] = detail::grow_classification_tree(X, y, n_classes, std::move(rows), params, rng);
    });
    return model;
}

Matrix predict_proba(const ForestModel& model, const Matrix& X) {
    detail::check_predict_shape(X, model.n_features);
    Matrix out(X.rows(), model.n_classes);
    const double weight = model.trees.empty() ? 0.0 : 1.0 / static_cast<double>(model.trees.size());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto row = out.row(r);
        for (const auto& tree : model.trees) {
            const auto hist = tree.predict(X.row(r));
            for (std::size_t k = 0; k < model.n_classes; ++k) row[k] += hist[k];
        }
        for (auto& v : row) v *= weight;
    }
    return out;
}

std::vector<int> predict(const ForestModel& model, const Matrix& X) {
    return argmax_rows(predict_proba(model, X));
}

}  // namespace ecmkit
