#include "ecmkit/datagen.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ecmkit/error.hpp"
#include "ecmkit/parallel.hpp"

namespace ecmkit {

void ParamPrior::validate() const {
    if (kind == Kind::Reciprocal && !(lo > 0.0 && hi > 0.0)) {
        throw Error(ErrorCode::NonPositiveBound,
                    fmt::format("reciprocal prior needs positive bounds, got [{}, {}]", lo, hi));
    }
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw Error(ErrorCode::InvalidRange, fmt::format("prior bounds [{}, {}] are not an interval", lo, hi));
    }
}

double ParamPrior::sample(Rng& rng) const {
    validate();
    if (kind == Kind::Reciprocal) {
        const double v = std::exp(ecmkit::uniform(rng, std::log(lo), std::log(hi)));
        return std::clamp(v, lo, hi);
    }
    return ecmkit::uniform(rng, lo, hi);
}

void FrequencyGridConfig::validate() const {
    if (!(min_lo > 0.0 && max_lo > 0.0 && min_hi > 0.0 && max_hi > 0.0)) {
        throw Error(ErrorCode::InvalidRange, "frequency bounds must be positive");
    }
    if (min_lo > max_lo || min_hi > max_hi) {
        throw Error(ErrorCode::InvalidRange, "frequency bound ranges are inverted");
    }
    if (!(max_lo < min_hi)) throw Error(ErrorCode::InvalidRange, "lower band overlaps upper band");
    if (max_lo > 1e1 || min_hi < 1e5) {
        throw Error(ErrorCode::InvalidRange, "every grid must cover the common band [10 Hz, 100 kHz]");
    }
    if (points_min < 2 || points_min > points_max) {
        throw Error(ErrorCode::InvalidRange,
                    fmt::format("invalid point-count range [{}, {}]", points_min, points_max));
    }
}

void GeneratorConfig::validate() const {
    grid.validate();
    for (const auto& [role, prior] : role_priors) prior.validate();
    for (const auto& spec : classes) {
        const auto model = parse_circuit(spec.circuit);
        const auto names = model.param_names();
        for (const auto& [name, prior] : spec.overrides) {
            if (std::find(names.begin(), names.end(), name) == names.end()) {
                throw Error(ErrorCode::InvalidConfig,
                            fmt::format("circuit {} has no parameter '{}'", model.canonical_name(), name));
            }
            prior.validate();
        }
    }
    if (tau_ratio < 0.0) throw Error(ErrorCode::InvalidConfig, "tau_ratio must be non-negative");
}

std::map<ParamRole, ParamPrior> default_role_priors() {
    return {
        {ParamRole::Inductance, ParamPrior::reciprocal(1e-8, 1e-5)},
        {ParamRole::Resistance, ParamPrior::reciprocal(1.0, 1e5)},
        {ParamRole::Capacitance, ParamPrior::reciprocal(1e-6, 1e-4)},
        {ParamRole::CpeExponent, ParamPrior::uniform(0.5, 1.0)},
        {ParamRole::CpeCapacitance, ParamPrior::reciprocal(1e-6, 1e-4)},
        {ParamRole::GerischerResistance, ParamPrior::reciprocal(1.0, 1e5)},
        {ParamRole::GerischerTime, ParamPrior::reciprocal(1e-4, 1e2)},
        {ParamRole::WarburgResistance, ParamPrior::reciprocal(1.0, 1e5)},
        {ParamRole::WarburgTime, ParamPrior::reciprocal(1e-4, 1e2)},
        {ParamRole::WarburgExponent, ParamPrior::uniform(0.3, 0.95)},
    };
}

std::vector<ClassSpec> default_classes() {
    const auto& names = predefined_circuits();
    const std::size_t counts[] = {1084, 1132, 1114, 1099, 1152, 1064, 1140, 1138, 404};
    std::vector<ClassSpec> out;
    for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names[i], counts[i], {}});
    return out;
}

GeneratorConfig default_generator_config() {
    GeneratorConfig config;
    config.classes = default_classes();
    config.role_priors = default_role_priors();
    return config;
}

std::vector<ParamPrior> resolve_priors(const CircuitModel& model, const GeneratorConfig& config,
                                       const std::map<std::string, ParamPrior>& overrides) {
    const auto defaults = default_role_priors();
    std::vector<ParamPrior> priors;
    priors.reserve(model.param_count());
    for (const auto& info : model.params()) {
        if (auto it = overrides.find(info.name); it != overrides.end()) {
            priors.push_back(it->second);
        } else if (auto role = config.role_priors.find(info.role); role != config.role_priors.end()) {
            priors.push_back(role->second);
        } else {
            priors.push_back(defaults.at(info.role));
        }
    }
    return priors;
}

std::vector<TauPair> rc_tau_pairs(const CircuitModel& model) {
    std::vector<TauPair> pairs;
    std::vector<std::size_t> r_index, c_index;
    std::size_t offset = 0;
    for (const auto& node : model.nodes()) {
        if (const auto* single = std::get_if<SingleElement>(&node)) {
            offset += element_param_count(single->kind);
            continue;
        }
        const auto& pair = std::get<ParallelPair>(node);
        if (pair.first == ElementKind::R && pair.second == ElementKind::C) {
            r_index.push_back(offset);
            c_index.push_back(offset + 1);
        }
        offset += element_param_count(pair.first) + element_param_count(pair.second);
    }
    if (r_index.size() >= 2) pairs.push_back({r_index[0], c_index[0], r_index[1], c_index[1]});
    return pairs;
}

std::vector<double> sample_params(const CircuitModel& model, std::span<const ParamPrior> priors, Rng& rng,
                                  double tau_ratio) {
    if (priors.size() != model.param_count()) {
        throw Error(ErrorCode::LengthMismatch, fmt::format("{} priors for {} parameters of {}", priors.size(),
                                                           model.param_count(), model.canonical_name()));
    }
    for (const auto& prior : priors) prior.validate();

    const bool constrained = tau_ratio > 0.0 && model.canonical_name() == "RC-RC-RCPE-RCPE";
    const auto pairs = constrained ? rc_tau_pairs(model) : std::vector<TauPair>{};

    std::vector<double> params(priors.size());
    for (int attempt = 0; attempt < 1'000'000; ++attempt) {
        for (std::size_t i = 0; i < priors.size(); ++i) params[i] = priors[i].sample(rng);
        bool accepted = true;
        for (const auto& p : pairs) {
            const double tau1 = params[p.r1] * params[p.c1];
            const double tau2 = params[p.r2] * params[p.c2];
            accepted = accepted && std::max(tau1 / tau2, tau2 / tau1) > tau_ratio;
        }
        if (accepted) return params;
    }
    throw Error(ErrorCode::InvalidConfig, "time-constant constraint could not be satisfied by the priors");
}

std::vector<double> log_grid(std::size_t points, double fmin, double fmax) {
    if (points < 2 || !(fmin > 0.0) || !(fmax > fmin)) {
        throw Error(ErrorCode::InvalidRange, fmt::format("cannot build {}-point grid on [{}, {}]", points, fmin, fmax));
    }
    const double a = std::log10(fmin);
    const double b = std::log10(fmax);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    grid.front() = fmin;
    grid.back() = fmax;
    return grid;
}

std::vector<double> sample_frequency_grid(const FrequencyGridConfig& config, Rng& rng) {
    config.validate();
    auto log_uniform = [&rng](double lo, double hi) {
        return std::clamp(std::exp(ecmkit::uniform(rng, std::log(lo), std::log(hi))), lo, hi);
    };
    const double lo = log_uniform(config.min_lo, config.max_lo);
    const double hi = log_uniform(config.min_hi, config.max_hi);
    const auto points = static_cast<std::size_t>(uniform_int(rng, config.points_min, config.points_max));
    return log_grid(points, lo, hi);
}

Dataset generate_dataset(const GeneratorConfig& config, int jobs) {
    config.validate();

    struct ClassOutput {
        std::vector<Spectrum> spectra;
        std::vector<std::vector<double>> params;
    };
    std::vector<ClassOutput> outputs(config.classes.size());

    parallel_for(config.classes.size(), jobs, [&](std::size_t c) {
        const auto& spec = config.classes[c];
        const auto model = parse_circuit(spec.circuit);
        const auto priors = resolve_priors(model, config, spec.overrides);
        Rng rng(derive_seed(config.seed, c));
        auto& out = outputs[c];
        out.spectra.reserve(spec.count);
        for (std::size_t i = 0; i < spec.count; ++i) {
            auto params = sample_params(model, priors, rng, config.tau_ratio);
            const auto freq = sample_frequency_grid(config.grid, rng);
            auto s = circuit_impedance(model, params, freq);
            s.id = fmt::format("{}_{:05d}", model.canonical_name(), i);
            out.spectra.push_back(std::move(s));
            out.params.push_back(std::move(params));
        }
    });

    Dataset d;
    d.provenance = fmt::format("generated seed={}", config.seed);
    for (auto& out : outputs) {
        for (std::size_t i = 0; i < out.spectra.size(); ++i) {
            d.spectra.push_back(std::move(out.spectra[i]));
            d.true_params.push_back(std::move(out.params[i]));
        }
    }
    return d;
}

}  // namespace ecmkit
