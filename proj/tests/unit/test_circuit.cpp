#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ecmkit/circuit.hpp"
#include "ecmkit/datagen.hpp"
#include "ecmkit/error.hpp"
#include "ecmkit/random.hpp"
#include "../support/oracles.hpp"

using namespace ecmkit;

namespace {

double rel_err(Complex a, Complex b) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace

TEST_SUITE("circuit") {

TEST_CASE("element impedances match closed forms") {
    const double w = 2.0 * std::numbers::pi * 50.0;
    CHECK(element_impedance(ElementKind::R, std::vector{12.5}, w) == Complex(12.5, 0.0));
    CHECK(std::abs(element_impedance(ElementKind::L, std::vector{1e-3}, w) - Complex(0.0, w * 1e-3)) < 1e-15);
    CHECK(rel_err(element_impedance(ElementKind::C, std::vector{1e-6}, w), Complex(0.0, -1.0 / (w * 1e-6))) < 1e-14);
}

TEST_CASE("CPE with exponent one is a capacitor") {
    for (double f = 1e-2; f <= 1e7; f *= 1.7) {
        const double w = 2.0 * std::numbers::pi * f;
        const Complex cpe = element_impedance(ElementKind::CPE, std::vector{1.0, 3.3e-5}, w);
        const Complex cap = element_impedance(ElementKind::C, std::vector{3.3e-5}, w);
        CHECK(rel_err(cpe, cap) < 1e-12);
    }
}

TEST_CASE("Gerischer at zero frequency equals its resistance") {
    CHECK(element_impedance(ElementKind::G, std::vector{47.0, 0.3}, 0.0) == Complex(47.0, 0.0));
}

TEST_CASE("Warburg short tends to R at low frequency") {
    const double t = 2.0;
    const double w = 1e-12 / t;
    const Complex z = element_impedance(ElementKind::Ws, std::vector{85.0, t, 0.5}, w);
    CHECK(std::abs(z - Complex(85.0, 0.0)) / 85.0 < 1e-6);
    CHECK(element_impedance(ElementKind::Ws, std::vector{85.0, t, 0.5}, 0.0) == Complex(85.0, 0.0));
}

TEST_CASE("bad element inputs raise") {
    CHECK_THROWS_AS(element_impedance(ElementKind::CPE, std::vector{1.0}, 1.0), Error);
    CHECK_THROWS_AS(element_impedance(ElementKind::C, std::vector{1.0}, 0.0), Error);
    CHECK_THROWS_AS(element_impedance(ElementKind::R, std::vector{1.0}, -1.0), Error);
}

TEST_CASE("table circuits parse to their parameter counts") {
    const std::vector<std::pair<std::string, std::size_t>> cases{
        {"L-R-RCPE", 5},  {"L-R-2RCPE", 8}, {"L-R-3RCPE", 11}, {"RC-G-G", 6}, {"RC-RC-RCPE-RCPE", 10},
        {"2RCPE", 6},     {"3RCPE", 9},     {"4RCPE", 12},     {"Rs_Ws", 4},
    };
    for (const auto& [label, count] : cases) {
        CAPTURE(label);
        CHECK(parse_circuit(label).param_count() == count);
    }
    CHECK(parse_circuit("L-R-2RCPE").canonical_name() == "L-R-RCPE-RCPE");
    CHECK(parse_circuit("Rs_Ws").canonical_name() == "R-Ws");
    CHECK(parse_circuit("Rs_Ws") == parse_circuit("R-Ws"));
}

TEST_CASE("parameter names follow element order") {
    const auto names = parse_circuit("L-R-RCPE").param_names();
    CHECK(names == std::vector<std::string>{"L1", "R1", "R2", "CPE1_t", "CPE1_C"});
    const auto gg = parse_circuit("RC-G-G").param_names();
    CHECK(gg == std::vector<std::string>{"R1", "C1", "R_g1", "t_g1", "R_g2", "t_g2"});
}

TEST_CASE("parser rejects malformed labels") {
    auto code_of = [](std::string_view label) {
        try {
            parse_circuit(label);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code_of("") == ErrorCode::EmptyLabel);
    CHECK(code_of("R-X") == ErrorCode::UnknownToken);
    CHECK(code_of("R--C") == ErrorCode::UnknownToken);
    CHECK(code_of("r-c") == ErrorCode::UnknownToken);
}

TEST_CASE("circuit impedance matches the naive evaluator") {
    Rng rng(2024);
    const auto& names = predefined_circuits();
    const auto config = default_generator_config();
    for (int draw = 0; draw < 300; ++draw) {
        const auto& label = names[static_cast<std::size_t>(uniform_int(rng, 0, 8))];
        const auto model = parse_circuit(label);
        const auto params = sample_params(model, resolve_priors(model, config), rng, 0.0);
        const auto freq = log_grid(40, 1e-2, 1e7);
        const auto z = impedance(model, params, freq);
        for (std::size_t i = 0; i < freq.size(); ++i) {
            CHECK(rel_err(z[i], oracle::naive_impedance(label, params, freq[i])) < 1e-12);
        }
    }
}

TEST_CASE("impedance validates its inputs") {
    const auto model = parse_circuit("R-Ws");
    CHECK_THROWS_AS(impedance(model, std::vector{1.0, 2.0}, std::vector{1.0}), Error);
    CHECK_THROWS_AS(impedance(model, std::vector{1.0, 2.0, 1.0, 0.5}, std::vector{0.0}), Error);
}

TEST_CASE("spectrum validation") {
    Spectrum s;
    s.freq = {1.0, 2.0};
    s.z = {Complex(1, 0)};
    CHECK_THROWS_AS(validate(s), Error);
    s.z.push_back(Complex(1, 0));
    CHECK_NOTHROW(validate(s));
    s.freq = {2.0, 1.0};
    CHECK_THROWS_AS(validate(s), Error);
}

}
