#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecmkit/circuit.hpp"
#include "ecmkit/random.hpp"

namespace ecmkit {

/// Reciprocal(lo, hi) has density proportional to 1/x (log-uniform);
/// Uniform(lo, hi) is flat.
struct ParamPrior {
    enum class Kind { Reciprocal, Uniform };

    Kind kind = Kind::Reciprocal;
    double lo = 1.0;
    double hi = 10.0;

    static ParamPrior reciprocal(double lo, double hi) { return {Kind::Reciprocal, lo, hi}; }
    static ParamPrior uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }

    /// Throws NonPositiveBound / InvalidRange when the bounds are unusable.
    void validate() const;
    double sample(Rng& rng) const;

    friend bool operator==(const ParamPrior&, const ParamPrior&) = default;
};

struct ClassSpec {
    std::string circuit;  // any label parse_circuit accepts
    std::size_t count = 0;
    /// Per-parameter overrides keyed by parameter name (e.g. "R2").
    std::map<std::string, ParamPrior> overrides;
};

struct FrequencyGridConfig {
    double min_lo = 1e-2;
    double max_lo = 1e1;
    double min_hi = 1e5;
    double max_hi = 1e7;
    int points_min = 30;
    int points_max = 100;

    void validate() const;
};

struct GeneratorConfig {
    std::vector<ClassSpec> classes;
    std::map<ParamRole, ParamPrior> role_priors;
    FrequencyGridConfig grid;
    /// Minimum max(tau1/tau2, tau2/tau1) between the two RC nodes of
    /// RC-RC-RCPE-RCPE.
    double tau_ratio = 10.0;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Default priors per parameter role. Magnitudes are reciprocal, exponents
/// uniform; the numbers are calibrated guesses, see configs/default.json.
std::map<ParamRole, ParamPrior> default_role_priors();

/// The nine predefined classes with their reference counts (9,327 spectra in total).
std::vector<ClassSpec> default_classes();

GeneratorConfig default_generator_config();

/// Priors for every parameter of `model`, role defaults overridden by name.
std::vector<ParamPrior> resolve_priors(const CircuitModel& model, const GeneratorConfig& config,
                                       const std::map<std::string, ParamPrior>& overrides = {});

/// Indices (into the parameter vector) of the R and C of the first two RC
/// nodes, or empty if the circuit has fewer than two RC nodes.
struct TauPair {
    std::size_t r1, c1, r2, c2;
};
std::vector<TauPair> rc_tau_pairs(const CircuitModel& model);

/// Independent draws from each prior. When `tau_ratio` > 0 and the circuit
/// is RC-RC-RCPE-RCPE, draws are rejected until the RC time constants differ
/// by more than that ratio.
std::vector<double> sample_params(const CircuitModel& model, std::span<const ParamPrior> priors, Rng& rng,
                                  double tau_ratio = 10.0);

std::vector<double> sample_frequency_grid(const FrequencyGridConfig& config, Rng& rng);

/// log-spaced grid with exact endpoints.
std::vector<double> log_grid(std::size_t points, double fmin, double fmax);

struct Dataset {
    std::vector<Spectrum> spectra;
    /// Generating parameters, parallel to spectra; empty for file sources.
    std::vector<std::vector<double>> true_params;
    std::string provenance;

    std::size_t size() const noexcept { return spectra.size(); }
};

/// Spectra in (class, index) order. Each class draws from its own sub-seed
/// derive_seed(seed, class_index), so `jobs` does not affect the output.
Dataset generate_dataset(const GeneratorConfig& config, int jobs = 1);

}  // namespace ecmkit
