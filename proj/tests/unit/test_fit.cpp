#include <doctest.h>

#include <functional>

#include <algorithm>
#include <cmath>

#include "ecmkit/datagen.hpp"
#include "ecmkit/error.hpp"
#include "ecmkit/fit.hpp"

using namespace ecmkit;

namespace {

Spectrum simulate(const std::string& label, const std::vector<double>& params) {
    const auto model = parse_circuit(label);
    return circuit_impedance(model, params, log_grid(50, 1e-1, 1e6));
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("internal transform round-trips inside the bounds") {
    const auto model = parse_circuit("L-R-RCPE");
    const auto bounds = default_bounds(model);
    CHECK(bounds[3].lo == 0.01);
    CHECK(bounds[3].hi == 1.0);
    CHECK(bounds[0].lo == 1e-15);
    const std::vector<double> p{2e-7, 12.0, 300.0, 0.83, 4e-5};
    const auto back = from_internal(model, to_internal(model, p, bounds), bounds);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(back[i] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("Jacobian agrees with Richardson extrapolation") {
    const auto model = parse_circuit("RC-G-G");
    const std::vector<double> truth{50.0, 2e-5, 30.0, 1e-3, 80.0, 0.2};
    const auto s = simulate("RC-G-G", truth);
    std::vector<double> p = truth;
    for (auto& v : p) v *= 1.3;
    const auto bounds = default_bounds(model);
    const auto u = to_internal(model, p, bounds);
    const auto J = fit_jacobian(model, s, u, bounds, Weighting::Modulus, 1e-6);
    auto residual_at = [&](const std::vector<double>& x) {
        return fit_residuals(model, s, from_internal(model, x, bounds), Weighting::Modulus);
    };
    for (std::size_t k = 0; k < u.size(); ++k) {
        auto central = [&](double h) {
            auto plus = u;
            auto minus = u;
            plus[k] += h;
            minus[k] -= h;
            return Eigen::VectorXd((residual_at(plus) - residual_at(minus)) / (2 * h));
        };
        const double h = 1e-3;
        const Eigen::VectorXd richardson = (4.0 * central(h / 2) - central(h)) / 3.0;
        const double scale = std::max(1.0, richardson.norm());
        CHECK((J.col(static_cast<Eigen::Index>(k)) - richardson).norm() / scale < 1e-6);
    }
}

TEST_CASE("residuals are stacked real then imaginary parts") {
    const auto model = parse_circuit("R-RC");
    const std::vector<double> p{10.0, 100.0, 1e-5};
    auto s = simulate("R-RC", p);
    s.z[0] += Complex(1.0, 2.0);
    const auto plain = fit_residuals(model, s, p, Weighting::None);
    REQUIRE(plain.size() == 100);
    CHECK(plain(0) == doctest::Approx(-1.0));
    CHECK(plain(50) == doctest::Approx(-2.0));
    const auto weighted = fit_residuals(model, s, p, Weighting::Modulus);
    CHECK(weighted(0) == doctest::Approx(-1.0 / std::abs(s.z[0])));
}

TEST_CASE("noiseless spectra are recovered from perturbed starts") {
    const std::vector<std::pair<std::string, std::vector<double>>> cases{
        {"R-RC", {10.0, 100.0, 1e-5}},
        {"L-R-RCPE", {2e-7, 12.0, 300.0, 0.83, 4e-5}},
        {"RCPE-RCPE", {40.0, 0.9, 1e-5, 400.0, 0.75, 2e-4}},
        {"R-Ws", {5.0, 120.0, 0.8, 0.45}},
        {"RC-G-G", {50.0, 2e-5, 30.0, 1e-3, 80.0, 0.2}},
    };
    for (const auto& [label, truth] : cases) {
        CAPTURE(label);
        const auto model = parse_circuit(label);
        const auto s = simulate(label, truth);
        std::vector<double> init = truth;
        for (std::size_t i = 0; i < init.size(); ++i) init[i] *= (i % 2 ? 1.25 : 0.8);
        for (std::size_t i = 0; i < init.size(); ++i) {
            if (is_exponent(model.params()[i].role)) init[i] = std::min(init[i], 0.99);
        }
        const auto result = fit_params(model, s, init);
        CHECK(result.converged);
        CHECK(fit_quality(model, result.params, s) < 1e-6);
        for (std::size_t i = 1; i < result.cost_history.size(); ++i) {
            CHECK(result.cost_history[i] <= result.cost_history[i - 1]);
        }
        CHECK(result.cost == result.cost_history.back());
    }
}

TEST_CASE("initial guess lies inside the bounds and fits a single arc") {
    const auto model = parse_circuit("R-RC");
    const auto s = simulate("R-RC", {10.0, 100.0, 1e-5});
    const auto guess = initial_guess(model, s);
    const auto bounds = default_bounds(model);
    for (std::size_t i = 0; i < guess.size(); ++i) {
        CHECK(guess[i] >= bounds[i].lo);
        CHECK(guess[i] <= bounds[i].hi);
    }
    const auto result = fit_params(model, s, guess);
    CHECK(fit_quality(model, result.params, s) < 1e-6);
    for (const auto& name : predefined_circuits()) {
        const auto m = parse_circuit(name);
        const auto g = initial_guess(m, s);
        const auto b = default_bounds(m);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK((g[i] >= b[i].lo && g[i] <= b[i].hi));
    }
    CHECK(code_of([&] { initial_guess(model, Spectrum{}); }) == ErrorCode::EmptySpectrum);
}

TEST_CASE("fit input errors") {
    const auto model = parse_circuit("R-RC");
    const auto s = simulate("R-RC", {10.0, 100.0, 1e-5});
    CHECK(code_of([&] { fit_params(model, s, std::vector{1.0, 2.0}); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([&] { fit_params(model, s, std::vector{-1.0, 100.0, 1e-5}); }) == ErrorCode::InitOutOfBounds);
    const auto cpe = parse_circuit("R-RCPE");
    CHECK(code_of([&] { fit_params(cpe, s, std::vector{1.0, 100.0, 1.5, 1e-5}); }) == ErrorCode::InitOutOfBounds);
    FitConfig bad;
    bad.tolerance = -1.0;
    CHECK(code_of([&] { fit_params(model, s, std::vector{10.0, 100.0, 1e-5}, bad); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("fit quality is zero at the truth") {
    const auto model = parse_circuit("R-Ws");
    const std::vector<double> p{5.0, 120.0, 0.8, 0.45};
    const auto s = simulate("R-Ws", p);
    CHECK(fit_quality(model, p, s) == 0.0);
    CHECK(fit_quality(model, std::vector{5.0, 120.0, 0.8, 0.5}, s) > 1e-3);
}

TEST_CASE("fit results csv") {
    FitRecord rec;
    rec.id = "a,b";
    rec.circuit = "R-RC";
    rec.names = {"R1", "R2", "C1"};
    rec.result.params = {1.5, 2.0, 1e-5};
    rec.result.cost = 0.25;
    rec.result.converged = true;
    rec.quality = 0.125;
    const auto csv = fit_results_csv(std::vector{rec});
    CHECK(csv == "id,circuit,params,cost,converged,quality\n\"a,b\",R-RC,R1=1.5;R2=2;C1=1e-05,0.25,true,0.125\n");
}

}
