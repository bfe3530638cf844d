#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ecmkit {

using Complex = std::complex<double>;

enum class ElementKind { L, R, C, CPE, G, Ws };

/// Fixed number of parameters for each element: L,R,C -> 1; CPE,G -> 2; Ws -> 3.
constexpr std::size_t element_param_count(ElementKind kind) noexcept {
    switch (kind) {
        case ElementKind::L:
        case ElementKind::R:
        case ElementKind::C: return 1;
        case ElementKind::CPE:
        case ElementKind::G: return 2;
        case ElementKind::Ws: return 3;
    }
    return 0;
}

const char* to_string(ElementKind kind) noexcept;

/// What a parameter physically is. Drives priors, fit transforms and guesses.
enum class ParamRole {
    Inductance,
    Resistance,
    Capacitance,
    CpeExponent,
    CpeCapacitance,
    GerischerResistance,
    GerischerTime,
    WarburgResistance,
    WarburgTime,
    WarburgExponent,
};

const char* to_string(ParamRole role) noexcept;
ParamRole param_role_from_string(std::string_view name);

/// Exponent-like roles live on a bounded interval; everything else is a
/// positive magnitude.
constexpr bool is_exponent(ParamRole role) noexcept {
    return role == ParamRole::CpeExponent || role == ParamRole::WarburgExponent;
}

struct SingleElement {
    ElementKind kind;
    friend bool operator==(const SingleElement&, const SingleElement&) = default;
};

/// Two single elements connected in parallel.
struct ParallelPair {
    ElementKind first;
    ElementKind second;
    friend bool operator==(const ParallelPair&, const ParallelPair&) = default;
};

using CircuitNode = std::variant<SingleElement, ParallelPair>;

struct ParamInfo {
    std::string name;
    ParamRole role;
    std::size_t node;     // index into CircuitModel::nodes
    bool in_parallel;     // belongs to a ParallelPair branch
    friend bool operator==(const ParamInfo&, const ParamInfo&) = default;
};

/// A series chain of nodes with its flattened parameter layout.
class CircuitModel {
public:
    CircuitModel(std::string canonical_name, std::vector<CircuitNode> nodes);

    const std::string& canonical_name() const noexcept { return name_; }
    const std::vector<CircuitNode>& nodes() const noexcept { return nodes_; }
    const std::vector<ParamInfo>& params() const noexcept { return params_; }
    std::vector<std::string> param_names() const;
    std::size_t param_count() const noexcept { return params_.size(); }

    friend bool operator==(const CircuitModel&, const CircuitModel&) = default;

private:
    std::string name_;
    std::vector<CircuitNode> nodes_;
    std::vector<ParamInfo> params_;
};

/// Measured or simulated impedance spectrum. Frequencies in Hz, increasing.
struct Spectrum {
    std::vector<double> freq;
    std::vector<Complex> z;
    std::string label;
    std::string id;

    std::size_t size() const noexcept { return freq.size(); }
    bool empty() const noexcept { return freq.empty(); }
    friend bool operator==(const Spectrum&, const Spectrum&) = default;
};

/// Checks the Spectrum invariants (equal lengths, n >= 1, positive strictly
/// increasing frequencies); throws LengthMismatch / DomainError.
void validate(const Spectrum& s);

/// The nine predefined circuit classes, canonical names in table order.
const std::vector<std::string>& predefined_circuits();

/// Parses a hyphen-separated series label. Tokens: L, R, C, G, Ws (series
/// elements) and RC, RCPE (two-branch parallels). Shorthand aliases such as
/// "L-R-2RCPE", "3RCPE" and "Rs_Ws" resolve to canonical names first.
CircuitModel parse_circuit(std::string_view label);

/// Impedance of a single element at angular frequency omega (rad/s).
/// Parameter order follows the naming scheme: CPE [t, C], G [R, t],
/// Ws [R, T, p].
Complex element_impedance(ElementKind kind, std::span<const double> params, double omega);

/// Impedance of the full circuit at each frequency (Hz); omega = 2*pi*f.
std::vector<Complex> impedance(const CircuitModel& model, std::span<const double> params,
                               std::span<const double> freq);

Spectrum circuit_impedance(const CircuitModel& model, std::span<const double> params,
                           std::span<const double> freq);

}  // namespace ecmkit
