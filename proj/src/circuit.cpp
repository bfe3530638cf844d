#include "ecmkit/circuit.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include <fmt/format.h>

#include "ecmkit/error.hpp"

namespace ecmkit {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kAliases{{
    {"L-R-2RCPE", "L-R-RCPE-RCPE"},
    {"L-R-3RCPE", "L-R-RCPE-RCPE-RCPE"},
    {"2RCPE", "RCPE-RCPE"},
    {"3RCPE", "RCPE-RCPE-RCPE"},
    {"4RCPE", "RCPE-RCPE-RCPE-RCPE"},
    {"Rs_Ws", "R-Ws"},
    {"Rs-Ws", "R-Ws"},
}};

std::vector<ParamRole> roles_of(ElementKind kind) {
    switch (kind) {
        case ElementKind::L: return {ParamRole::Inductance};
        case ElementKind::R: return {ParamRole::Resistance};
        case ElementKind::C: return {ParamRole::Capacitance};
        case ElementKind::CPE: return {ParamRole::CpeExponent, ParamRole::CpeCapacitance};
        case ElementKind::G: return {ParamRole::GerischerResistance, ParamRole::GerischerTime};
        case ElementKind::Ws:
            return {ParamRole::WarburgResistance, ParamRole::WarburgTime, ParamRole::WarburgExponent};
    }
    return {};
}

std::vector<std::string> names_of(ElementKind kind, int number) {
    switch (kind) {
        case ElementKind::L: return {fmt::format("L{}", number)};
        case ElementKind::R: return {fmt::format("R{}", number)};
        case ElementKind::C: return {fmt::format("C{}", number)};
        case ElementKind::CPE: return {fmt::format("CPE{}_t", number), fmt::format("CPE{}_C", number)};
        case ElementKind::G: return {fmt::format("R_g{}", number), fmt::format("t_g{}", number)};
        case ElementKind::Ws:
            return {fmt::format("W{}_R", number), fmt::format("W{}_T", number), fmt::format("W{}_p", number)};
    }
    return {};
}

CircuitNode parse_token(std::string_view token) {
    if (token == "L") return SingleElement{ElementKind::L};
    if (token == "R") return SingleElement{ElementKind::R};
    if (token == "C") return SingleElement{ElementKind::C};
    if (token == "G") return SingleElement{ElementKind::G};
    if (token == "Ws") return SingleElement{ElementKind::Ws};
    if (token == "RC") return ParallelPair{ElementKind::R, ElementKind::C};
    if (token == "RCPE") return ParallelPair{ElementKind::R, ElementKind::CPE};
    throw Error(ErrorCode::UnknownToken, std::string(token));
}

// (j*omega*t)^p on the principal branch: |omega*t|^p * exp(j*p*pi/2).
Complex j_power(double omega_t, double p) {
    return std::polar(std::pow(omega_t, p), p * std::numbers::pi / 2.0);
}

Complex parallel(Complex a, Complex b) {
    return 1.0 / (1.0 / a + 1.0 / b);
}

}  // namespace

const char* to_string(ElementKind kind) noexcept {
    switch (kind) {
        case ElementKind::L: return "L";
        case ElementKind::R: return "R";
        case ElementKind::C: return "C";
        case ElementKind::CPE: return "CPE";
        case ElementKind::G: return "G";
        case ElementKind::Ws: return "Ws";
    }
    return "?";
}

const char* to_string(ParamRole role) noexcept {
    switch (role) {
        case ParamRole::Inductance: return "inductance";
        case ParamRole::Resistance: return "resistance";
        case ParamRole::Capacitance: return "capacitance";
        case ParamRole::CpeExponent: return "cpe_exponent";
        case ParamRole::CpeCapacitance: return "cpe_capacitance";
        case ParamRole::GerischerResistance: return "gerischer_resistance";
        case ParamRole::GerischerTime: return "gerischer_time";
        case ParamRole::WarburgResistance: return "warburg_resistance";
        case ParamRole::WarburgTime: return "warburg_time";
        case ParamRole::WarburgExponent: return "warburg_exponent";
    }
    return "?";
}

ParamRole param_role_from_string(std::string_view name) {
    for (auto role : {ParamRole::Inductance, ParamRole::Resistance, ParamRole::Capacitance,
                      ParamRole::CpeExponent, ParamRole::CpeCapacitance, ParamRole::GerischerResistance,
                      ParamRole::GerischerTime, ParamRole::WarburgResistance, ParamRole::WarburgTime,
                      ParamRole::WarburgExponent}) {
        if (name == to_string(role)) return role;
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown parameter role '{}'", name));
}

CircuitModel::CircuitModel(std::string canonical_name, std::vector<CircuitNode> nodes)
    : name_(std::move(canonical_name)), nodes_(std::move(nodes)) {
    std::array<int, 6> counters{};
    auto add = [&](ElementKind kind, std::size_t node, bool in_parallel) {
        const int number = ++counters[static_cast<std::size_t>(kind)];
        auto names = names_of(kind, number);
        auto roles = roles_of(kind);
        for (std::size_t i = 0; i < names.size(); ++i) {
            params_.push_back({std::move(names[i]), roles[i], node, in_parallel});
        }
    };
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        if (const auto* single = std::get_if<SingleElement>(&nodes_[n])) {
            add(single->kind, n, false);
        } else {
            const auto& pair = std::get<ParallelPair>(nodes_[n]);
            add(pair.first, n, true);
            add(pair.second, n, true);
        }
    }
}

std::vector<std::string> CircuitModel::param_names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.name);
    return out;
}

void validate(const Spectrum& s) {
    if (s.freq.size() != s.z.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    fmt::format("spectrum '{}': {} frequencies vs {} impedances", s.id, s.freq.size(), s.z.size()));
    }
    if (s.freq.empty()) throw Error(ErrorCode::EmptySpectrum, fmt::format("spectrum '{}' is empty", s.id));
    for (std::size_t i = 0; i < s.freq.size(); ++i) {
        if (!(s.freq[i] > 0.0)) {
            throw Error(ErrorCode::DomainError, fmt::format("spectrum '{}': non-positive frequency", s.id));
        }
        if (i > 0 && !(s.freq[i] > s.freq[i - 1])) {
            throw Error(ErrorCode::DomainError,
                        fmt::format("spectrum '{}': frequencies not strictly increasing", s.id));
        }
    }
}

const std::vector<std::string>& predefined_circuits() {
    static const std::vector<std::string> names{
        "L-R-RCPE",    "L-R-RCPE-RCPE",  "L-R-RCPE-RCPE-RCPE", "RC-G-G", "RC-RC-RCPE-RCPE",
        "RCPE-RCPE", "RCPE-RCPE-RCPE", "RCPE-RCPE-RCPE-RCPE", "R-Ws",
    };
    return names;
}

CircuitModel parse_circuit(std::string_view label) {
    if (label.empty()) throw Error(ErrorCode::EmptyLabel, "circuit label is empty");
    for (const auto& [alias, canonical] : kAliases) {
        if (label == alias) {
            label = canonical;
            break;
        }
    }

    std::vector<CircuitNode> nodes;
    std::string canonical;
    std::size_t start = 0;
    while (true) {
        const std::size_t dash = label.find('-', start);
        const std::string_view token =
            label.substr(start, dash == std::string_view::npos ? std::string_view::npos : dash - start);
        nodes.push_back(parse_token(token));
        if (!canonical.empty()) canonical += '-';
        canonical += token;
        if (dash == std::string_view::npos) break;
        start = dash + 1;
    }
    return CircuitModel(std::move(canonical), std::move(nodes));
}

Complex element_impedance(ElementKind kind, std::span<const double> params, double omega) {
    if (params.size() != element_param_count(kind)) {
        throw Error(ErrorCode::LengthMismatch,
                    fmt::format("{} takes {} parameters, got {}", to_string(kind), element_param_count(kind),
                                params.size()));
    }
    if (!(omega >= 0.0)) throw Error(ErrorCode::DomainError, "angular frequency must be non-negative");

    using namespace std::complex_literals;
    switch (kind) {
        case ElementKind::L: return 1i * omega * params[0];
        case ElementKind::R: return {params[0], 0.0};
        case ElementKind::C:
            if (omega == 0.0) throw Error(ErrorCode::DomainError, "capacitor impedance is singular at omega = 0");
            return 1.0 / (1i * omega * params[0]);
        case ElementKind::CPE: {
            if (omega == 0.0) throw Error(ErrorCode::DomainError, "CPE impedance is singular at omega = 0");
            const double t = params[0];
            const double c = params[1];
            return 1.0 / (c * j_power(omega, t));
        }
        case ElementKind::G: {
            const double r = params[0];
            const double t = params[1];
            return r / std::sqrt(1.0 + 1i * omega * t);
        }
        case ElementKind::Ws: {
            const double r = params[0];
            const double t = params[1];
            const double p = params[2];
            const Complex x = j_power(omega * t, p);
            if (x == 0.0) return {r, 0.0};  // tanh(x)/x -> 1
            return r * std::tanh(x) / x;
        }
    }
    return {};
}

std::vector<Complex> impedance(const CircuitModel& model, std::span<const double> params,
                               std::span<const double> freq) {
    if (params.size() != model.param_count()) {
        throw Error(ErrorCode::LengthMismatch, fmt::format("circuit {} takes {} parameters, got {}",
                                                           model.canonical_name(), model.param_count(),
                                                           params.size()));
    }
    std::vector<Complex> z(freq.size());
    for (std::size_t i = 0; i < freq.size(); ++i) {
        if (!(freq[i] > 0.0)) throw Error(ErrorCode::DomainError, "frequencies must be positive");
        const double omega = 2.0 * std::numbers::pi * freq[i];
        std::size_t offset = 0;
        auto take = [&](ElementKind kind) {
            const auto n = element_param_count(kind);
            const auto value = element_impedance(kind, params.subspan(offset, n), omega);
            offset += n;
            return value;
        };
        Complex total{0.0, 0.0};
        for (const auto& node : model.nodes()) {
            if (const auto* single = std::get_if<SingleElement>(&node)) {
                total += take(single->kind);
            } else {
                const auto& pair = std::get<ParallelPair>(node);
                const Complex a = take(pair.first);
                const Complex b = take(pair.second);
                total += parallel(a, b);
            }
        }
        z[i] = total;
    }
    return z;
}

Spectrum circuit_impedance(const CircuitModel& model, std::span<const double> params,
                           std::span<const double> freq) {
    Spectrum s;
    s.z = impedance(model, params, freq);
    s.freq.assign(freq.begin(), freq.end());
    s.label = model.canonical_name();
    return s;
}

}  // namespace ecmkit
