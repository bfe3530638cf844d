#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecmkit/circuit.hpp"

namespace ecmkit {

enum class Weighting { None, Modulus };

struct FitConfig {
    std::size_t max_iterations = 200;
    double tolerance = 1e-10;  // relative cost decrease that ends the run
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.1;
    double max_damping = 1e16;
    double fd_step = 1e-6;  // central-difference step in transformed space
    Weighting weighting = Weighting::Modulus;

    void validate() const;
};

struct ParamBounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// Magnitudes in [1e-15, 1e15], exponents in [0.01, 1].
std::vector<ParamBounds> default_bounds(const CircuitModel& model);

struct FitResult {
    std::vector<double> params;
    double cost = 0.0;  // weighted sum of squared residuals
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<bool> at_bound;
    std::vector<double> cost_history;  // initial cost, then every accepted step
};

/// Heuristic starting point from the spectrum shape, clipped into bounds.
/// Throws EmptySpectrum.
std::vector<double> initial_guess(const CircuitModel& model, const Spectrum& s);

/// Levenberg-Marquardt with Marquardt scaling. Magnitudes are optimized as
/// logarithms and exponents through a sigmoid onto their bounds.
/// Throws InitOutOfBounds, LengthMismatch or NonFiniteResidual.
FitResult fit_params(const CircuitModel& model, const Spectrum& s, std::span<const double> init,
                     const FitConfig& config = {}, std::vector<ParamBounds> bounds = {});

/// sqrt(mean |Z_model - z|^2 / mean |z|^2).
double fit_quality(const CircuitModel& model, std::span<const double> params, const Spectrum& s);

// Building blocks, exposed for testing.

std::vector<double> to_internal(const CircuitModel& model, std::span<const double> params,
                                std::span<const ParamBounds> bounds);
std::vector<double> from_internal(const CircuitModel& model, std::span<const double> internal,
                                  std::span<const ParamBounds> bounds);

/// [Re(Z_model - z); Im(Z_model - z)], optionally divided by |z| per point.
Eigen::VectorXd fit_residuals(const CircuitModel& model, const Spectrum& s, std::span<const double> params,
                              Weighting weighting);

/// Central-difference Jacobian of the residuals with respect to the
/// internal variables.
Eigen::MatrixXd fit_jacobian(const CircuitModel& model, const Spectrum& s, std::span<const double> internal,
                             std::span<const ParamBounds> bounds, Weighting weighting, double step);

struct FitRecord {
    std::string id;
    std::string circuit;
    std::vector<std::string> names;
    FitResult result;
    double quality = 0.0;
};

/// Columns: id,circuit,params,cost,converged,quality. The params cell holds
/// name=value pairs joined by ';'.
std::string fit_results_csv(std::span<const FitRecord> records);

}  // namespace ecmkit
