#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecmkit/datagen.hpp"
#include "ecmkit/fit.hpp"
#include "ecmkit/model.hpp"
#include "ecmkit/preprocess.hpp"

namespace ecmkit {

struct FeatureConfig {
    std::vector<std::string> bank;  // feature names; empty means the default bank
    bool select = true;
    double fdr = 0.05;
    bool normalize = false;  // divide each spectrum by its max real part before extraction
};

struct RunConfig {
    std::optional<std::uint64_t> seed;
    GeneratorConfig generator = default_generator_config();
    FilterConfig filter;
    InterpolationGrid interpolation;
    FeatureConfig features;
    double test_fraction = 0.2;
    ForestConfig forest;
    GbtConfig gbt;
    FitConfig fit;
    std::size_t importance_repeats = 5;  // 0 skips permutation importance

    void validate() const;
};

/// Strict: unknown keys anywhere raise InvalidConfig; missing keys keep
/// their defaults. Malformed JSON raises ParseError.
RunConfig parse_run_config(std::string_view text);

/// Every field written out, so the file documents the full run.
std::string run_config_to_json(const RunConfig& config);

/// --seed, then the config file, then ECMKIT_SEED, then 42.
std::uint64_t resolve_seed(std::optional<std::uint64_t> cli_seed, const RunConfig& config,
                           const char* env_value);

/// Distributes a master seed to every seeded stage. The generator uses it
/// as is; the split and the models get derived sub-seeds.
void apply_seed(RunConfig& config, std::uint64_t seed);

std::uint64_t split_seed(std::uint64_t seed);
std::uint64_t importance_seed(std::uint64_t seed);

}  // namespace ecmkit
