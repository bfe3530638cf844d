#include <json.hpp>

#include "ecmkit/error.hpp"
#include "ecmkit/model.hpp"

namespace ecmkit {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ecmkit-model";
constexpr int kVersion = 1;

json tree_to_json(const DecisionTree& tree) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array();
    for (const auto& n : tree.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
            {"value", tree.values()}};
}

DecisionTree tree_from_json(const json& j, std::size_t width) {
    const auto feature = j.at("feature").get<std::vector<int>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<int>>();
    const auto right = j.at("right").get<std::vector<int>>();
    if (threshold.size() != feature.size() || left.size() != feature.size() || right.size() != feature.size()) {
        throw Error(ErrorCode::ParseError, "tree node arrays differ in length");
    }
    std::vector<TreeNode> nodes(feature.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = {feature[i], threshold[i], left[i], right[i]};
    return DecisionTree::from_arrays(width, std::move(nodes), j.at("value").get<std::vector<double>>());
}

json input_to_json(const ModelInput& in) {
    return {{"kind", in.kind == ModelInput::Kind::RawMaxReal ? "raw_max_real" : "features"},
            {"grid_points", in.grid_points},
            {"grid_fmin", in.grid_fmin},
            {"grid_fmax", in.grid_fmax},
            {"normalized", in.normalized}};
}

ModelInput input_from_json(const json& j) {
    ModelInput in;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "raw_max_real") {
        in.kind = ModelInput::Kind::RawMaxReal;
    } else if (kind == "features") {
        in.kind = ModelInput::Kind::Features;
    } else {
        throw Error(ErrorCode::ParseError, "unknown model input kind '" + kind + "'");
    }
    in.grid_points = j.at("grid_points").get<std::size_t>();
    in.grid_fmin = j.at("grid_fmin").get<double>();
    in.grid_fmax = j.at("grid_fmax").get<double>();
    in.normalized = j.value("normalized", false);
    return in;
}

json header(const char* kind, std::vector<std::string> classes, const std::vector<std::string>& features,
            std::size_t n_classes, std::size_t n_features, const ModelInput& input) {
    // Unnamed classes are written as their indices so the file stays self-describing.
    if (classes.empty()) {
        for (std::size_t k = 0; k < n_classes; ++k) classes.push_back(std::to_string(k));
    }
    return {{"format", kFormat},         {"version", kVersion},       {"kind", kind},
            {"class_names", classes},    {"feature_names", features}, {"n_features", n_features},
            {"input", input_to_json(input)}};
}

void check_names(std::size_t n_classes, std::size_t n_features, const std::vector<std::string>& classes,
                 const std::vector<std::string>& features) {
    if (classes.size() != n_classes) throw Error(ErrorCode::ParseError, "class name count does not match model");
    if (!features.empty() && features.size() != n_features) {
        throw Error(ErrorCode::ParseError, "feature name count does not match model");
    }
}

}  // namespace

std::string serialize(const ForestModel& model) {
    json j = header("random_forest", model.class_names, model.feature_names, model.n_classes, model.n_features, model.input);
    j["config"] = {{"n_trees", model.config.n_trees},
                   {"max_depth", model.config.max_depth},
                   {"min_samples_leaf", model.config.min_samples_leaf},
                   {"max_features", model.config.max_features},
                   {"bootstrap", model.config.bootstrap},
                   {"seed", model.config.seed}};
    json trees = json::array();
    for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
    j["trees"] = std::move(trees);
    return j.dump() + "\n";
}

std::string serialize(const GbtModel& model) {
    json j = header("gbt", model.class_names, model.feature_names, model.n_classes, model.n_features, model.input);
    j["config"] = {{"n_rounds", model.config.n_rounds},
                   {"max_depth", model.config.max_depth},
                   {"learning_rate", model.config.learning_rate},
                   {"lambda", model.config.lambda},
                   {"min_child_weight", model.config.min_child_weight},
                   {"row_subsample", model.config.row_subsample},
                   {"col_subsample", model.config.col_subsample},
                   {"seed", model.config.seed}};
    j["base_scores"] = model.base_scores;
    j["learning_rate"] = model.learning_rate;
    json trees = json::array();
    for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
    j["trees"] = std::move(trees);
    return j.dump() + "\n";
}

LoadedModel deserialize_model(const std::string& text) {
    LoadedModel out;
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != kFormat) throw Error(ErrorCode::ParseError, "not an ecmkit model file");
        if (j.at("version").get<int>() != kVersion) {
            throw Error(ErrorCode::ParseError, "unsupported model version " + j.at("version").dump());
        }
        const auto kind = j.at("kind").get<std::string>();
        const auto classes = j.at("class_names").get<std::vector<std::string>>();
        const auto features = j.at("feature_names").get<std::vector<std::string>>();
        const auto n_features = j.at("n_features").get<std::size_t>();
        const auto input = input_from_json(j.at("input"));
        const auto& cfg = j.at("config");
        if (kind == "random_forest") {
            out.is_forest = true;
            auto& m = out.forest;
            m.n_classes = classes.size();
            m.n_features = n_features;
            m.class_names = classes;
            m.feature_names = features;
            m.input = input;
            m.config.n_trees = cfg.at("n_trees").get<std::size_t>();
            m.config.max_depth = cfg.at("max_depth").get<std::size_t>();
            m.config.min_samples_leaf = cfg.at("min_samples_leaf").get<std::size_t>();
            m.config.max_features = cfg.at("max_features").get<std::size_t>();
            m.config.bootstrap = cfg.at("bootstrap").get<bool>();
            m.config.seed = cfg.at("seed").get<std::uint64_t>();
            for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, m.n_classes));
            check_names(m.n_classes, m.n_features, classes, features);
        } else if (kind == "gbt") {
            out.is_forest = false;
            auto& m = out.gbt;
            m.n_classes = classes.size();
            m.n_features = n_features;
            m.class_names = classes;
            m.feature_names = features;
            m.input = input;
            m.config.n_rounds = cfg.at("n_rounds").get<std::size_t>();
            m.config.max_depth = cfg.at("max_depth").get<std::size_t>();
            m.config.learning_rate = cfg.at("learning_rate").get<double>();
            m.config.lambda = cfg.at("lambda").get<double>();
            m.config.min_child_weight = cfg.at("min_child_weight").get<double>();
            m.config.row_subsample = cfg.at("row_subsample").get<double>();
            m.config.col_subsample = cfg.at("col_subsample").get<double>();
            m.config.seed = cfg.at("seed").get<std::uint64_t>();
            m.base_scores = j.at("base_scores").get<std::vector<double>>();
            m.learning_rate = j.at("learning_rate").get<double>();
            for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, 1));
            if (m.base_scores.size() != m.n_classes || (m.n_classes > 0 && m.trees.size() % m.n_classes != 0)) {
                throw Error(ErrorCode::ParseError, "boosted model has inconsistent class count");
            }
            check_names(m.n_classes, m.n_features, classes, features);
        } else {
            throw Error(ErrorCode::ParseError, "unknown model kind '" + kind + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed model file: ") + e.what());
    }
    return out;
}

Matrix LoadedModel::predict_proba(const Matrix& X) const {
    return is_forest ? ecmkit::predict_proba(forest, X) : ecmkit::predict_proba(gbt, X);
}

}  // namespace ecmkit
