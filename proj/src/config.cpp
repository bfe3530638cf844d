#include "ecmkit/config.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "ecmkit/error.hpp"
#include "ecmkit/features.hpp"

namespace ecmkit {

using nlohmann::json;

namespace {

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, fmt::format("'{}' must be an object", where));
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw Error(ErrorCode::InvalidConfig, fmt::format("unknown key '{}{}'", where, key));
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidConfig, fmt::format("'{}{}' has the wrong type", where, key));
    }
}

const char* prior_kind(ParamPrior::Kind k) {
    return k == ParamPrior::Kind::Reciprocal ? "reciprocal" : "uniform";
}

ParamPrior prior_from_json(const json& j, const std::string& where) {
    allow_keys(j, where + ".", {"kind", "lo", "hi"});
    ParamPrior p;
    std::string kind = "reciprocal";
    read(j, "kind", kind, where + ".");
    if (kind == "reciprocal") {
        p.kind = ParamPrior::Kind::Reciprocal;
    } else if (kind == "uniform") {
        p.kind = ParamPrior::Kind::Uniform;
    } else {
        throw Error(ErrorCode::InvalidConfig, fmt::format("'{}.kind' must be reciprocal or uniform", where));
    }
    if (!j.contains("lo") || !j.contains("hi")) {
        throw Error(ErrorCode::InvalidConfig, fmt::format("'{}' needs lo and hi", where));
    }
    read(j, "lo", p.lo, where + ".");
    read(j, "hi", p.hi, where + ".");
    return p;
}

json prior_to_json(const ParamPrior& p) {
    return {{"kind", prior_kind(p.kind)}, {"lo", p.lo}, {"hi", p.hi}};
}

void generator_from_json(const json& j, GeneratorConfig& g) {
    const std::string w = "generator.";
    allow_keys(j, w, {"classes", "priors", "grid", "tau_ratio"});
    if (j.contains("classes")) {
        g.classes.clear();
        for (const auto& c : j.at("classes")) {
            allow_keys(c, w + "classes[].", {"circuit", "count", "overrides"});
            ClassSpec spec;
            read(c, "circuit", spec.circuit, w + "classes[].");
            read(c, "count", spec.count, w + "classes[].");
            g.classes.push_back(std::move(spec));
        }
    }
    if (j.contains("priors")) {
        const auto& priors = j.at("priors");
        if (!priors.is_object()) throw Error(ErrorCode::InvalidConfig, "'generator.priors' must be an object");
        for (const auto& [key, value] : priors.items()) {
            g.role_priors[param_role_from_string(key)] = prior_from_json(value, w + "priors." + key);
        }
    }
    if (j.contains("grid")) {
        const auto& grid = j.at("grid");
        allow_keys(grid, w + "grid.", {"min_lo", "max_lo", "min_hi", "max_hi", "points_min", "points_max"});
        read(grid, "min_lo", g.grid.min_lo, w + "grid.");
        read(grid, "max_lo", g.grid.max_lo, w + "grid.");
        read(grid, "min_hi", g.grid.min_hi, w + "grid.");
        read(grid, "max_hi", g.grid.max_hi, w + "grid.");
        read(grid, "points_min", g.grid.points_min, w + "grid.");
        read(grid, "points_max", g.grid.points_max, w + "grid.");
    }
    read(j, "tau_ratio", g.tau_ratio, w);
}

}  // namespace

void RunConfig::validate() const {
    generator.validate();
    filter.validate();
    if (interpolation.points < 2 || !(interpolation.fmin > 0.0) || !(interpolation.fmax > interpolation.fmin)) {
        throw Error(ErrorCode::InvalidConfig, "interpolation needs >= 2 points and 0 < fmin < fmax");
    }
    if (!(features.fdr > 0.0 && features.fdr < 1.0)) throw Error(ErrorCode::InvalidConfig, "fdr must lie in (0, 1)");
    for (const auto& name : features.bank) features::find_feature(name);
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "test_fraction must lie in (0, 1)");
    }
    forest.validate();
    gbt.validate();
    fit.validate();
}

RunConfig parse_run_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, fmt::format("config: {}", e.what()));
    }
    RunConfig c;
    allow_keys(j, "", {"seed", "generator", "filter", "interpolation", "features", "test_fraction", "forest", "gbt",
                       "fit", "importance_repeats"});
    if (j.contains("seed")) {
        std::uint64_t seed = 0;
        read(j, "seed", seed, "");
        c.seed = seed;
    }
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        generator_from_json(g, c.generator);
        if (g.contains("classes")) {
            for (std::size_t i = 0; i < g.at("classes").size(); ++i) {
                const auto& cls = g.at("classes")[i];
                if (!cls.contains("overrides")) continue;
                // Override keys are parameter names; each must exist in the circuit.
                const auto model = parse_circuit(c.generator.classes[i].circuit);
                const auto names = model.param_names();
                for (const auto& [name, prior] : cls.at("overrides").items()) {
                    if (std::find(names.begin(), names.end(), name) == names.end()) {
                        throw Error(ErrorCode::InvalidConfig,
                                    fmt::format("'{}' is not a parameter of {}", name, model.canonical_name()));
                    }
                    c.generator.classes[i].overrides[name] = prior_from_json(prior, "generator.classes[]." + name);
                }
            }
        }
    }
    if (j.contains("filter")) {
        const auto& f = j.at("filter");
        allow_keys(f, "filter.", {"min_neg_imag_points", "range_ratio", "real_increase_tol", "real_increase_mode"});
        read(f, "min_neg_imag_points", c.filter.min_neg_imag_points, "filter.");
        read(f, "range_ratio", c.filter.range_ratio, "filter.");
        read(f, "real_increase_tol", c.filter.real_increase_tol, "filter.");
        std::string mode = "all_pairs";
        read(f, "real_increase_mode", mode, "filter.");
        if (mode == "all_pairs") {
            c.filter.real_increase_mode = FilterConfig::RealIncreaseMode::AllPairs;
        } else if (mode == "consecutive") {
            c.filter.real_increase_mode = FilterConfig::RealIncreaseMode::Consecutive;
        } else {
            throw Error(ErrorCode::InvalidConfig, "'filter.real_increase_mode' must be all_pairs or consecutive");
        }
    }
    if (j.contains("interpolation")) {
        const auto& i = j.at("interpolation");
        allow_keys(i, "interpolation.", {"points", "fmin", "fmax"});
        read(i, "points", c.interpolation.points, "interpolation.");
        read(i, "fmin", c.interpolation.fmin, "interpolation.");
        read(i, "fmax", c.interpolation.fmax, "interpolation.");
    }
    if (j.contains("features")) {
        const auto& f = j.at("features");
        allow_keys(f, "features.", {"bank", "select", "fdr", "normalize"});
        read(f, "bank", c.features.bank, "features.");
        read(f, "select", c.features.select, "features.");
        read(f, "fdr", c.features.fdr, "features.");
        read(f, "normalize", c.features.normalize, "features.");
    }
    read(j, "test_fraction", c.test_fraction, "");
    if (j.contains("forest")) {
        const auto& f = j.at("forest");
        allow_keys(f, "forest.", {"n_trees", "max_depth", "min_samples_leaf", "max_features", "bootstrap"});
        read(f, "n_trees", c.forest.n_trees, "forest.");
        read(f, "max_depth", c.forest.max_depth, "forest.");
        read(f, "min_samples_leaf", c.forest.min_samples_leaf, "forest.");
        read(f, "max_features", c.forest.max_features, "forest.");
        read(f, "bootstrap", c.forest.bootstrap, "forest.");
    }
    if (j.contains("gbt")) {
        const auto& g = j.at("gbt");
        allow_keys(g, "gbt.", {"n_rounds", "max_depth", "learning_rate", "lambda", "min_child_weight",
                               "row_subsample", "col_subsample"});
        read(g, "n_rounds", c.gbt.n_rounds, "gbt.");
        read(g, "max_depth", c.gbt.max_depth, "gbt.");
        read(g, "learning_rate", c.gbt.learning_rate, "gbt.");
        read(g, "lambda", c.gbt.lambda, "gbt.");
        read(g, "min_child_weight", c.gbt.min_child_weight, "gbt.");
        read(g, "row_subsample", c.gbt.row_subsample, "gbt.");
        read(g, "col_subsample", c.gbt.col_subsample, "gbt.");
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        allow_keys(f, "fit.", {"max_iterations", "tolerance", "initial_damping", "damping_up", "damping_down",
                               "max_damping", "fd_step", "weighting"});
        read(f, "max_iterations", c.fit.max_iterations, "fit.");
        read(f, "tolerance", c.fit.tolerance, "fit.");
        read(f, "initial_damping", c.fit.initial_damping, "fit.");
        read(f, "damping_up", c.fit.damping_up, "fit.");
        read(f, "damping_down", c.fit.damping_down, "fit.");
        read(f, "max_damping", c.fit.max_damping, "fit.");
        read(f, "fd_step", c.fit.fd_step, "fit.");
        std::string weighting = "modulus";
        read(f, "weighting", weighting, "fit.");
        if (weighting == "modulus") {
            c.fit.weighting = Weighting::Modulus;
        } else if (weighting == "none") {
            c.fit.weighting = Weighting::None;
        } else {
            throw Error(ErrorCode::InvalidConfig, "'fit.weighting' must be modulus or none");
        }
    }
    read(j, "importance_repeats", c.importance_repeats, "");
    c.validate();
    return c;
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    if (c.seed) j["seed"] = *c.seed;
    json classes = json::array();
    for (const auto& cls : c.generator.classes) {
        json overrides = json::object();
        for (const auto& [name, prior] : cls.overrides) overrides[name] = prior_to_json(prior);
        classes.push_back({{"circuit", cls.circuit}, {"count", cls.count}, {"overrides", overrides}});
    }
    json priors = json::object();
    for (const auto& [role, prior] : c.generator.role_priors) priors[to_string(role)] = prior_to_json(prior);
    const auto& g = c.generator.grid;
    j["generator"] = {{"classes", classes},
                      {"priors", priors},
                      {"grid",
                       {{"min_lo", g.min_lo},
                        {"max_lo", g.max_lo},
                        {"min_hi", g.min_hi},
                        {"max_hi", g.max_hi},
                        {"points_min", g.points_min},
                        {"points_max", g.points_max}}},
                      {"tau_ratio", c.generator.tau_ratio}};
    j["filter"] = {{"min_neg_imag_points", c.filter.min_neg_imag_points},
                   {"range_ratio", c.filter.range_ratio},
                   {"real_increase_tol", c.filter.real_increase_tol},
                   {"real_increase_mode", c.filter.real_increase_mode == FilterConfig::RealIncreaseMode::AllPairs
                                              ? "all_pairs"
                                              : "consecutive"}};
    j["interpolation"] = {{"points", c.interpolation.points},
                          {"fmin", c.interpolation.fmin},
                          {"fmax", c.interpolation.fmax}};
    j["features"] = {{"bank", c.features.bank}, {"select", c.features.select}, {"fdr", c.features.fdr},
                     {"normalize", c.features.normalize}};
    j["test_fraction"] = c.test_fraction;
    j["forest"] = {{"n_trees", c.forest.n_trees},
                   {"max_depth", c.forest.max_depth},
                   {"min_samples_leaf", c.forest.min_samples_leaf},
                   {"max_features", c.forest.max_features},
                   {"bootstrap", c.forest.bootstrap}};
    j["gbt"] = {{"n_rounds", c.gbt.n_rounds},
                {"max_depth", c.gbt.max_depth},
                {"learning_rate", c.gbt.learning_rate},
                {"lambda", c.gbt.lambda},
                {"min_child_weight", c.gbt.min_child_weight},
                {"row_subsample", c.gbt.row_subsample},
                {"col_subsample", c.gbt.col_subsample}};
    j["fit"] = {{"max_iterations", c.fit.max_iterations},
                {"tolerance", c.fit.tolerance},
                {"initial_damping", c.fit.initial_damping},
                {"damping_up", c.fit.damping_up},
                {"damping_down", c.fit.damping_down},
                {"max_damping", c.fit.max_damping},
                {"fd_step", c.fit.fd_step},
                {"weighting", c.fit.weighting == Weighting::Modulus ? "modulus" : "none"}};
    j["importance_repeats"] = c.importance_repeats;
    return j.dump(2) + "\n";
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> cli_seed, const RunConfig& config, const char* env_value) {
    if (cli_seed) return *cli_seed;
    if (config.seed) return *config.seed;
    if (env_value && *env_value) {
        std::uint64_t seed = 0;
        const std::string_view text(env_value);
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            throw Error(ErrorCode::InvalidConfig, fmt::format("ECMKIT_SEED '{}' is not an unsigned integer", text));
        }
        return seed;
    }
    return 42;
}

std::uint64_t split_seed(std::uint64_t seed) {
    return derive_seed(seed, 0x5350);
}

std::uint64_t importance_seed(std::uint64_t seed) {
    return derive_seed(seed, 0x494d);
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
    config.seed = seed;
    config.generator.seed = seed;
    config.forest.seed = derive_seed(seed, 0x5246);
    config.gbt.seed = derive_seed(seed, 0x4742);
}

}  // namespace ecmkit
