#include <doctest.h>

#include <functional>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecmkit/error.hpp"
#include "ecmkit/metrics.hpp"
#include "ecmkit/model.hpp"
#include "ecmkit/random.hpp"

using namespace ecmkit;

namespace {

struct Blobs {
    Matrix X;
    std::vector<int> y;
};

// Three Gaussian clusters in the first two columns plus one noise column.
Blobs blobs(std::size_t n, std::uint64_t seed, double spread = 0.5) {
    Rng rng(seed);
    Blobs b{Matrix(n, 3), std::vector<int>(n)};
    const double cx[] = {0.0, 3.0, 0.0};
    const double cy[] = {0.0, 0.0, 3.0};
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(i % 3);
        b.y[i] = k;
        b.X(i, 0) = cx[k] + spread * standard_normal(rng);
        b.X(i, 1) = cy[k] + spread * standard_normal(rng);
        b.X(i, 2) = standard_normal(rng);
    }
    return b;
}

double accuracy(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(a.size());
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("decision tree routing and thresholds") {
    // One feature, classes split between 2 and 5: the threshold is the lower value.
    Matrix X(4, 1);
    X(0, 0) = 1;
    X(1, 0) = 2;
    X(2, 0) = 5;
    X(3, 0) = 6;
    const std::vector<int> y{0, 0, 1, 1};
    detail::ClassificationTreeParams params;
    Rng rng(1);
    const auto tree = detail::grow_classification_tree(X, y, 2, std::vector<std::size_t>{0, 1, 2, 3}, params, rng);
    REQUIRE(tree.nodes().size() == 3);
    CHECK(tree.nodes()[0].feature == 0);
    CHECK(tree.nodes()[0].threshold == 2.0);
    const double left[] = {2.0};
    const double right[] = {2.5};
    CHECK(tree.predict(left)[0] == 1.0);
    CHECK(tree.predict(right)[1] == 1.0);
}

TEST_CASE("label encoding sorts classes") {
    const std::vector<std::string> labels{"b", "a", "c", "a"};
    const auto enc = LabelEncoding::fit(labels);
    CHECK(enc.classes == std::vector<std::string>{"a", "b", "c"});
    CHECK(enc.encode(labels) == std::vector<int>{1, 0, 2, 0});
    CHECK_THROWS_AS(enc.encode(std::vector<std::string>{"d"}), Error);
}

TEST_CASE("random forest separates blobs") {
    const auto train = blobs(300, 1);
    const auto test = blobs(150, 2);
    ForestConfig config;
    config.n_trees = 40;
    const auto model = train_random_forest(train.X, train.y, 3, config);
    CHECK(accuracy(predict(model, test.X), test.y) > 0.95);
    const auto proba = predict_proba(model, test.X);
    for (std::size_t r = 0; r < proba.rows(); ++r) {
        const auto row = proba.row(r);
        CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0));
    }
    CHECK(model.trees.size() == 40);
}

TEST_CASE("gradient boosting separates blobs and lowers its loss") {
    const auto train = blobs(300, 3);
    const auto test = blobs(150, 4);
    GbtConfig config;
    config.n_rounds = 30;
    config.max_depth = 3;
    config.row_subsample = 1.0;
    std::vector<double> loss;
    const auto model = train_gbt(train.X, train.y, 3, config, 1, &loss);
    CHECK(accuracy(predict(model, test.X), test.y) > 0.95);
    REQUIRE(loss.size() == 30);
    for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1] + 1e-12);
    CHECK(model.trees.size() == 90);
    CHECK(model.n_rounds() == 30);
}

TEST_CASE("learning rate zero predicts the base scores") {
    auto train = blobs(90, 5);
    train.y[0] = 0;  // class counts 30/30/30
    GbtConfig config;
    config.n_rounds = 5;
    config.learning_rate = 0.0;
    const auto model = train_gbt(train.X, train.y, 3, config);
    const auto scores = predict_scores(model, train.X);
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        for (std::size_t k = 0; k < 3; ++k) CHECK(scores(r, k) == model.base_scores[k]);
    }
    CHECK(model.base_scores[0] == doctest::Approx(std::log(1.0 / 3.0)));
    const auto proba = predict_proba(model, train.X);
    CHECK(proba(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("training is deterministic and independent of jobs") {
    const auto data = blobs(200, 6, 1.5);
    ForestConfig fc;
    fc.n_trees = 12;
    CHECK(serialize(train_random_forest(data.X, data.y, 3, fc, 1)) ==
          serialize(train_random_forest(data.X, data.y, 3, fc, 4)));
    GbtConfig gc;
    gc.n_rounds = 8;
    gc.col_subsample = 0.7;
    CHECK(serialize(train_gbt(data.X, data.y, 3, gc, 1)) == serialize(train_gbt(data.X, data.y, 3, gc, 3)));
    fc.seed = 7;
    CHECK(serialize(train_random_forest(data.X, data.y, 3, fc, 1)) !=
          serialize(train_random_forest(data.X, data.y, 3, ForestConfig{.n_trees = 12}, 1)));
}

TEST_CASE("training and prediction errors") {
    const auto data = blobs(30, 7);
    ForestConfig fc;
    fc.n_trees = 3;
    CHECK(code_of([&] { train_random_forest(Matrix(), {}, 3, fc); }) == ErrorCode::EmptyMatrix);
    CHECK(code_of([&] { train_random_forest(data.X, std::vector<int>(30, 0), 3, fc); }) ==
          ErrorCode::DegenerateLabels);
    CHECK(code_of([&] { train_random_forest(data.X, std::vector<int>(29, 0), 3, fc); }) == ErrorCode::ShapeMismatch);
    auto bad = data.y;
    bad[0] = 5;
    CHECK(code_of([&] { train_gbt(data.X, bad, 3, GbtConfig{}); }) == ErrorCode::UnknownLabel);
    const auto model = train_random_forest(data.X, data.y, 3, fc);
    CHECK(code_of([&] { predict_proba(model, Matrix(2, 4)); }) == ErrorCode::ShapeMismatch);
    GbtConfig gc;
    gc.learning_rate = 1.5;
    CHECK(code_of([&] { train_gbt(data.X, data.y, 3, gc); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("model files round-trip") {
    const auto data = blobs(120, 8, 1.0);
    ForestConfig fc;
    fc.n_trees = 5;
    auto forest = train_random_forest(data.X, data.y, 3, fc);
    forest.class_names = {"x", "y", "z"};
    forest.feature_names = {"f0", "f1", "f2"};
    const auto text = serialize(forest);
    const auto loaded = deserialize_model(text);
    CHECK(loaded.is_forest);
    CHECK(loaded.class_names() == forest.class_names);
    CHECK(loaded.predict_proba(data.X) == predict_proba(forest, data.X));
    CHECK(serialize(loaded.forest) == text);

    GbtConfig gc;
    gc.n_rounds = 4;
    auto gbt = train_gbt(data.X, data.y, 3, gc);
    gbt.input.kind = ModelInput::Kind::Features;
    const auto gtext = serialize(gbt);
    const auto gloaded = deserialize_model(gtext);
    CHECK_FALSE(gloaded.is_forest);
    CHECK(gloaded.input().kind == ModelInput::Kind::Features);
    CHECK(gloaded.predict_proba(data.X) == predict_proba(gbt, data.X));
    CHECK(serialize(gloaded.gbt) == gtext);

    CHECK(code_of([] { deserialize_model("{not json"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { deserialize_model(R"({"format":"other"})"); }) == ErrorCode::ParseError);
}

TEST_CASE("stratified split") {
    std::vector<int> y;
    for (int k = 0; k < 3; ++k) y.insert(y.end(), static_cast<std::size_t>(10 + 7 * k), k);
    const auto test = stratified_split(y, 0.2, 9);
    std::vector<std::size_t> per_class(3, 0);
    for (std::size_t i = 0; i < y.size(); ++i) per_class[static_cast<std::size_t>(y[i])] += test[i] ? 1 : 0;
    CHECK(per_class == std::vector<std::size_t>{2, 3, 5});  // round(0.2 * {10, 17, 24})
    CHECK(stratified_split(y, 0.2, 9) == test);
    CHECK(stratified_split(y, 0.2, 10) != test);
}

TEST_CASE("permutation importance ranks the informative column first") {
    const auto data = blobs(300, 10);
    ForestConfig fc;
    fc.n_trees = 20;
    const auto model = train_random_forest(data.X, data.y, 3, fc);
    const PredictFn fn = [&](const Matrix& X) { return predict(model, X); };
    const auto imp = permutation_importance(fn, data.X, data.y, 3, 3, 11);
    REQUIRE(imp.size() == 3);
    CHECK(imp[0] > 0.2);
    CHECK(imp[1] > 0.2);
    CHECK(std::abs(imp[2]) < 0.05);
}

}
