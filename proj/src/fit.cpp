#include "ecmkit/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "ecmkit/error.hpp"
#include "ecmkit/io.hpp"

namespace ecmkit {

void FitConfig::validate() const {
    if (max_iterations == 0) throw Error(ErrorCode::InvalidConfig, "max_iterations must be positive");
    if (!(tolerance > 0.0 && tolerance < 1.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must lie in (0, 1)");
    if (!(initial_damping > 0.0) || !(damping_up > 1.0) || !(damping_down > 0.0 && damping_down < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "damping must be positive, grow by > 1 and shrink by < 1");
    }
    if (!(max_damping > initial_damping) || !(fd_step > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "max_damping and fd_step must be positive");
    }
}

std::vector<ParamBounds> default_bounds(const CircuitModel& model) {
    std::vector<ParamBounds> out;
    for (const auto& p : model.params()) {
        out.push_back(is_exponent(p.role) ? ParamBounds{0.01, 1.0} : ParamBounds{1e-15, 1e15});
    }
    return out;
}

namespace {

// Exponents start at least this fraction of the range inside their bounds,
// where the sigmoid still has a usable slope.
constexpr double kEdgeFraction = 1e-2;
// Largest change of any internal variable in one step (a factor e for
// magnitudes). Longer steps tend to throw weakly determined parameters
// onto a bound where their gradient vanishes.
constexpr double kMaxStep = 1.0;

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

void check_lengths(const CircuitModel& model, std::size_t params, std::size_t bounds) {
    if (params != model.param_count() || bounds != model.param_count()) {
        throw Error(ErrorCode::LengthMismatch,
                    fmt::format("{} expects {} parameters", model.canonical_name(), model.param_count()));
    }
}

// Largest capacitive arc is centred at the -Im maximum; extra arcs are
// spread a decade apart around it.
struct SpectrumShape {
    double re_min = 0.0;
    double re_max = 0.0;
    double tau_peak = 1.0;
    double omega_min = 1.0;
    Complex z_low{};
    double inductance = 1e-7;
};

SpectrumShape describe(const Spectrum& s) {
    SpectrumShape shape;
    shape.re_min = std::numeric_limits<double>::infinity();
    shape.re_max = -std::numeric_limits<double>::infinity();
    std::size_t peak = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        shape.re_min = std::min(shape.re_min, s.z[i].real());
        shape.re_max = std::max(shape.re_max, s.z[i].real());
        if (-s.z[i].imag() > -s.z[peak].imag()) peak = i;
    }
    shape.tau_peak = 1.0 / (2.0 * std::numbers::pi * s.freq[peak]);
    shape.omega_min = 2.0 * std::numbers::pi * s.freq.front();
    shape.z_low = s.z.front();
    for (std::size_t i = s.size(); i-- > 0;) {
        if (s.z[i].imag() > 0.0) {
            shape.inductance = s.z[i].imag() / (2.0 * std::numbers::pi * s.freq[i]);
            break;
        }
    }
    return shape;
}

bool is_capacitive(ElementKind k) { return k == ElementKind::C || k == ElementKind::CPE; }

}  // namespace

std::vector<double> initial_guess(const CircuitModel& model, const Spectrum& s) {
    if (s.empty()) throw Error(ErrorCode::EmptySpectrum, "cannot guess parameters for an empty spectrum");
    const SpectrumShape shape = describe(s);
    const auto& params = model.params();
    const auto& nodes = model.nodes();

    std::size_t series_r = 0, shared_r = 0;
    for (const auto& p : params) {
        if (p.role == ParamRole::Resistance && !p.in_parallel) ++series_r;
        if ((p.role == ParamRole::Resistance && p.in_parallel) || p.role == ParamRole::GerischerResistance ||
            p.role == ParamRole::WarburgResistance) {
            ++shared_r;
        }
    }
    const double extent = std::max(shape.re_max - shape.re_min, 1e-6 * std::max(std::abs(shape.re_max), 1.0));
    const double r_share = shared_r ? extent / static_cast<double>(shared_r) : extent;
    const double r_series = series_r ? std::max(shape.re_min, 0.0) / static_cast<double>(series_r) : 0.0;

    // Time constant per capacitive parallel node.
    std::vector<std::size_t> arc_nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (const auto* pair = std::get_if<ParallelPair>(&nodes[i])) {
            if (is_capacitive(pair->first) || is_capacitive(pair->second)) arc_nodes.push_back(i);
        }
    }
    auto arc_tau = [&](std::size_t node) {
        const auto it = std::find(arc_nodes.begin(), arc_nodes.end(), node);
        const double offset = static_cast<double>(it - arc_nodes.begin()) - 0.5 * double(arc_nodes.size() - 1);
        return shape.tau_peak * std::pow(10.0, offset);
    };

    constexpr double kCpeExponent = 0.8;
    std::vector<double> guess(params.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        switch (p.role) {
            case ParamRole::Inductance: guess[i] = shape.inductance; break;
            case ParamRole::Resistance: guess[i] = p.in_parallel ? r_share : r_series; break;
            case ParamRole::GerischerResistance:
            case ParamRole::WarburgResistance: guess[i] = r_share; break;
            case ParamRole::GerischerTime:
            case ParamRole::WarburgTime: guess[i] = shape.tau_peak; break;
            case ParamRole::WarburgExponent: guess[i] = 0.5; break;
            case ParamRole::CpeExponent: guess[i] = kCpeExponent; break;
            case ParamRole::Capacitance:
                if (p.in_parallel) {
                    guess[i] = arc_tau(p.node) / r_share;
                } else {
                    const double im = std::abs(shape.z_low.imag());
                    guess[i] = im > 0.0 ? 1.0 / (shape.omega_min * im) : shape.tau_peak / r_share;
                }
                break;
            case ParamRole::CpeCapacitance:
                if (p.in_parallel) {
                    guess[i] = std::pow(arc_tau(p.node), kCpeExponent) / r_share;
                } else {
                    const double mag = std::abs(shape.z_low);
                    guess[i] = mag > 0.0 ? 1.0 / (std::pow(shape.omega_min, kCpeExponent) * mag)
                                         : std::pow(shape.tau_peak, kCpeExponent) / r_share;
                }
                break;
        }
    }
    const auto bounds = default_bounds(model);
    for (std::size_t i = 0; i < guess.size(); ++i) {
        if (!std::isfinite(guess[i])) guess[i] = bounds[i].lo;
        guess[i] = std::clamp(guess[i], bounds[i].lo, bounds[i].hi);
    }
    return guess;
}

std::vector<double> to_internal(const CircuitModel& model, std::span<const double> params,
                                std::span<const ParamBounds> bounds) {
    check_lengths(model, params.size(), bounds.size());
    std::vector<double> u(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (is_exponent(model.params()[i].role)) {
            double frac = (params[i] - bounds[i].lo) / (bounds[i].hi - bounds[i].lo);
            frac = std::clamp(frac, kEdgeFraction, 1.0 - kEdgeFraction);
            u[i] = std::log(frac / (1.0 - frac));
        } else {
            u[i] = std::log(params[i]);
        }
    }
    return u;
}

std::vector<double> from_internal(const CircuitModel& model, std::span<const double> internal,
                                  std::span<const ParamBounds> bounds) {
    check_lengths(model, internal.size(), bounds.size());
    std::vector<double> p(internal.size());
    for (std::size_t i = 0; i < internal.size(); ++i) {
        if (is_exponent(model.params()[i].role)) {
            p[i] = bounds[i].lo + (bounds[i].hi - bounds[i].lo) * sigmoid(internal[i]);
        } else {
            p[i] = std::clamp(std::exp(internal[i]), bounds[i].lo, bounds[i].hi);
        }
    }
    return p;
}

Eigen::VectorXd fit_residuals(const CircuitModel& model, const Spectrum& s, std::span<const double> params,
                              Weighting weighting) {
    const auto zm = impedance(model, params, s.freq);
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::VectorXd r(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        Complex d = zm[k] - s.z[k];
        if (weighting == Weighting::Modulus) {
            const double m = std::abs(s.z[k]);
            d = m > 0.0 ? d / m : d;
        }
        r[i] = d.real();
        r[n + i] = d.imag();
    }
    return r;
}

Eigen::MatrixXd fit_jacobian(const CircuitModel& model, const Spectrum& s, std::span<const double> internal,
                             std::span<const ParamBounds> bounds, Weighting weighting, double step) {
    const auto n = static_cast<Eigen::Index>(2 * s.size());
    Eigen::MatrixXd J(n, static_cast<Eigen::Index>(internal.size()));
    std::vector<double> u(internal.begin(), internal.end());
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double saved = u[j];
        u[j] = saved + step;
        const Eigen::VectorXd plus = fit_residuals(model, s, from_internal(model, u, bounds), weighting);
        u[j] = saved - step;
        const Eigen::VectorXd minus = fit_residuals(model, s, from_internal(model, u, bounds), weighting);
        u[j] = saved;
        J.col(static_cast<Eigen::Index>(j)) = (plus - minus) / (2.0 * step);
    }
    return J;
}

FitResult fit_params(const CircuitModel& model, const Spectrum& s, std::span<const double> init,
                     const FitConfig& config, std::vector<ParamBounds> bounds) {
    config.validate();
    validate(s);
    if (bounds.empty()) bounds = default_bounds(model);
    check_lengths(model, init.size(), bounds.size());
    for (std::size_t i = 0; i < init.size(); ++i) {
        if (!(init[i] >= bounds[i].lo && init[i] <= bounds[i].hi)) {
            throw Error(ErrorCode::InitOutOfBounds,
                        fmt::format("{} = {} outside [{}, {}]", model.params()[i].name, init[i], bounds[i].lo,
                                    bounds[i].hi));
        }
    }

    std::vector<double> u = to_internal(model, init, bounds);
    auto evaluate = [&](std::span<const double> internal) {
        return fit_residuals(model, s, from_internal(model, internal, bounds), config.weighting);
    };
    Eigen::VectorXd r = evaluate(u);
    if (!r.allFinite()) throw Error(ErrorCode::NonFiniteResidual, "model is not finite at the initial parameters");

    // Cost of predicting zero everywhere; anything this many orders below it
    // is exact to working precision.
    double reference = 0.0;
    for (auto z : s.z) {
        const double m = std::abs(z);
        reference += config.weighting == Weighting::Modulus ? (m > 0.0 ? 1.0 : 0.0) : m * m;
    }
    const double exact_cost = 1e-30 * std::max(reference, std::numeric_limits<double>::min());

    FitResult result;
    double cost = r.squaredNorm();
    result.cost_history.push_back(cost);
    double lambda = config.initial_damping;
    const auto P = static_cast<Eigen::Index>(u.size());
    std::vector<double> trial(u.size());

    while (result.iterations < config.max_iterations) {
        if (cost <= exact_cost) {
            result.converged = true;
            break;
        }
        const Eigen::MatrixXd J = fit_jacobian(model, s, u, bounds, config.weighting, config.fd_step);
        ++result.iterations;
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        Eigen::VectorXd scale = A.diagonal();
        const double floor = std::max(1e-12 * scale.maxCoeff(), std::numeric_limits<double>::min());
        for (Eigen::Index j = 0; j < P; ++j) scale[j] = std::max(scale[j], floor);

        bool accepted = false;
        bool stop = false;
        while (!accepted) {
            Eigen::MatrixXd M = A;
            M.diagonal() += lambda * scale;
            Eigen::VectorXd delta = M.ldlt().solve(-g);
            const double longest = delta.cwiseAbs().maxCoeff();
            if (longest > kMaxStep) delta *= kMaxStep / longest;
            double new_cost = std::numeric_limits<double>::infinity();
            Eigen::VectorXd r_new;
            if (delta.allFinite()) {
                for (Eigen::Index j = 0; j < P; ++j) trial[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(j)] + delta[j];
                for (std::size_t j = 0; j < trial.size(); ++j) {
                    if (!is_exponent(model.params()[j].role)) {
                        trial[j] = std::clamp(trial[j], std::log(bounds[j].lo), std::log(bounds[j].hi));
                    }
                }
                r_new = evaluate(trial);
                if (r_new.allFinite()) new_cost = r_new.squaredNorm();
            }
            if (new_cost < cost) {
                const double decrease = (cost - new_cost) / cost;
                u = trial;
                r = std::move(r_new);
                cost = new_cost;
                result.cost_history.push_back(cost);
                lambda = std::max(lambda * config.damping_down, 1e-15);
                accepted = true;
                if (decrease < config.tolerance) {
                    result.converged = true;
                    stop = true;
                }
            } else {
                lambda *= config.damping_up;
                if (lambda > config.max_damping) {
                    stop = true;
                    break;
                }
            }
        }
        if (stop) break;
    }
    if (!result.converged && cost <= exact_cost) result.converged = true;

    result.params = from_internal(model, u, bounds);
    result.cost = cost;
    result.at_bound.resize(result.params.size());
    for (std::size_t i = 0; i < result.params.size(); ++i) {
        const double width = bounds[i].hi - bounds[i].lo;
        const double tol = is_exponent(model.params()[i].role) ? 1e-6 * width : 0.0;
        result.at_bound[i] = result.params[i] <= bounds[i].lo + tol || result.params[i] >= bounds[i].hi - tol;
    }
    return result;
}

double fit_quality(const CircuitModel& model, std::span<const double> params, const Spectrum& s) {
    const auto zm = impedance(model, params, s.freq);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        num += std::norm(zm[i] - s.z[i]);
        den += std::norm(s.z[i]);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

std::string fit_results_csv(std::span<const FitRecord> records) {
    std::string out = "id,circuit,params,cost,converged,quality\n";
    for (const auto& rec : records) {
        std::string params;
        for (std::size_t i = 0; i < rec.names.size() && i < rec.result.params.size(); ++i) {
            if (i) params += ';';
            params += rec.names[i] + "=" + format_double(rec.result.params[i]);
        }
        out += fmt::format("{},{},{},{},{},{}\n", csv_escape(rec.id), csv_escape(rec.circuit), csv_escape(params),
                           format_double(rec.result.cost), rec.result.converged ? "true" : "false",
                           format_double(rec.quality));
    }
    return out;
}

}  // namespace ecmkit
