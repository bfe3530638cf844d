#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ecmkit/datagen.hpp"
#include "ecmkit/error.hpp"
#include "ecmkit/preprocess.hpp"

using namespace ecmkit;

namespace {

// A clean RC arc on 40 points: Re falls, -Im positive everywhere.
Spectrum arc(double r0 = 10.0, double r1 = 100.0, double c = 1e-5) {
    const auto model = parse_circuit("R-RC");
    return circuit_impedance(model, std::vector{r0, r1, c}, log_grid(40, 1.0, 1e6));
}

Spectrum from_points(std::vector<Complex> z) {
    Spectrum s;
    s.z = std::move(z);
    s.freq = log_grid(s.z.size(), 1.0, 1e3);
    s.id = "t";
    s.label = "X";
    return s;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("a clean arc passes every criterion") {
    const FilterConfig config;
    CHECK_FALSE(filter_spectrum(arc(), config).has_value());
}

TEST_CASE("too few negative imaginary points") {
    FilterConfig config;
    std::vector<Complex> z;
    for (int i = 0; i < 12; ++i) z.emplace_back(10.0 - i * 0.1, i < 9 ? -1.0 : 0.5);
    CHECK(filter_spectrum(from_points(z), config) == RejectReason::TooFewNegImag);
    z[9] = Complex(9.1, -1.0);
    CHECK(filter_spectrum(from_points(z), config) != RejectReason::TooFewNegImag);
}

TEST_CASE("small range of the negative imaginary part") {
    FilterConfig config;
    std::vector<Complex> z;
    for (int i = 0; i < 12; ++i) z.emplace_back(10.0 - i * 0.1, -1.0);
    z.emplace_back(8.0, 3.0);  // -Im = -3, so max(-Im) = 1 < 0.5 * 3
    CHECK(filter_spectrum(from_points(z), config) == RejectReason::SmallNegImagRange);
    z.back() = Complex(8.0, 1.5);  // 1 >= 0.75
    CHECK_FALSE(filter_spectrum(from_points(z), config).has_value());
}

TEST_CASE("negative real part after dropping inductive points") {
    FilterConfig config;
    std::vector<Complex> z;
    for (int i = 0; i < 12; ++i) z.emplace_back(10.0 - i, -1.0 - i);
    CHECK(filter_spectrum(from_points(z), config) == RejectReason::NegativeReal);
    // A negative real part on a point with Im > 0 is dropped first.
    z.back() = Complex(-1.0, 2.0);
    for (std::size_t i = 0; i + 1 < z.size(); ++i) z[i] = Complex(12.0 - static_cast<double>(i), -5.0);
    CHECK_FALSE(filter_spectrum(from_points(z), config).has_value());
}

TEST_CASE("real part rising with frequency") {
    FilterConfig config;
    std::vector<Complex> z;
    for (int i = 0; i < 12; ++i) z.emplace_back(10.0 - i * 0.2, -1.0);
    CHECK_FALSE(filter_spectrum(from_points(z), config).has_value());
    z[8] = Complex(z[7].real() + 0.35, -1.0);  // +0.035 of the max real
    CHECK(filter_spectrum(from_points(z), config) == RejectReason::RealIncrease);
    z[8] = Complex(z[7].real() + 0.25, -1.0);  // +0.025, tolerated
    CHECK_FALSE(filter_spectrum(from_points(z), config).has_value());
}

TEST_CASE("all-pairs and consecutive modes differ on slow drifts") {
    std::vector<Complex> z;
    for (int i = 0; i < 12; ++i) z.emplace_back(5.0 + i * 0.02, -1.0);  // max 5.22, each step 0.4%
    FilterConfig all_pairs;
    FilterConfig consecutive;
    consecutive.real_increase_mode = FilterConfig::RealIncreaseMode::Consecutive;
    CHECK(filter_spectrum(from_points(z), all_pairs) == RejectReason::RealIncrease);
    CHECK_FALSE(filter_spectrum(from_points(z), consecutive).has_value());
}

TEST_CASE("decision is independent of criterion order") {
    GeneratorConfig gen = default_generator_config();
    for (auto& c : gen.classes) c.count = 40;
    const auto d = generate_dataset(gen);
    const FilterConfig config;
    const RejectReason all[] = {RejectReason::TooFewNegImag, RejectReason::SmallNegImagRange,
                                RejectReason::NegativeReal, RejectReason::RealIncrease};
    for (const auto& s : d.spectra) {
        const bool any = std::any_of(std::begin(all), std::end(all), [&](auto r) { return violates(s, config, r); });
        CHECK(any == filter_spectrum(s, config).has_value());
    }
}

TEST_CASE("filtering is idempotent and counts add up") {
    GeneratorConfig gen = default_generator_config();
    for (auto& c : gen.classes) c.count = 60;
    const auto d = generate_dataset(gen);
    const auto first = filter_dataset(d, FilterConfig{});
    CHECK(first.decisions.size() == d.size());
    CHECK(first.kept.size() + first.rejected_count() == d.size());
    std::size_t kept = 0;
    for (const auto& [c, n] : first.kept_per_class) kept += n;
    CHECK(kept == first.kept.size());
    const auto second = filter_dataset(first.kept, FilterConfig{});
    CHECK(second.rejected_count() == 0);
    for (const auto& s : first.kept.spectra) {
        CHECK(std::none_of(s.z.begin(), s.z.end(), [](Complex z) { return z.imag() > 0.0; }));
    }
}

TEST_CASE("filter report csv has one row per spectrum") {
    GeneratorConfig gen = default_generator_config();
    for (auto& c : gen.classes) c.count = 3;
    const auto report = filter_dataset(generate_dataset(gen), FilterConfig{});
    const auto csv = filter_report_csv(report);
    CHECK(csv.rfind("id,class,decision,reason\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 28);
}

TEST_CASE("interpolation onto the source grid is the identity") {
    const auto s = arc();
    const auto out = interpolate(s, s.freq);
    CHECK_FALSE(out.extrapolated);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(out.spectrum.z[i] - s.z[i]) < 1e-12 * std::abs(s.z[i]));
}

TEST_CASE("interpolation reproduces functions linear in log frequency") {
    Spectrum s;
    s.freq = {1.0, 3.0, 20.0, 700.0, 5e3, 4e4, 2e5, 1e6};
    for (double f : s.freq) s.z.emplace_back(3.0 - 0.5 * std::log10(f), -1.0 + 0.25 * std::log10(f));
    const auto out = interpolate(s, 30, 1e1, 1e5);
    CHECK_FALSE(out.extrapolated);
    for (std::size_t k = 0; k < 30; ++k) {
        const double x = std::log10(out.spectrum.freq[k]);
        CHECK(std::abs(out.spectrum.z[k].real() - (3.0 - 0.5 * x)) < 1e-9);
        CHECK(std::abs(out.spectrum.z[k].imag() - (-1.0 + 0.25 * x)) < 1e-9);
    }
}

TEST_CASE("partial coverage is flagged and ends are held") {
    Spectrum s;
    s.freq = {1e2, 1e3, 1e4};
    s.z = {Complex(3, -1), Complex(2, -2), Complex(1, -1)};
    const auto out = interpolate(s, 30, 1e1, 1e5);
    CHECK(out.extrapolated);
    CHECK(out.spectrum.z.front() == s.z.front());
    CHECK(out.spectrum.z.back() == s.z.back());
    CHECK_THROWS_AS(interpolate(from_points({Complex(1, 0)}), 30, 1e1, 1e5), Error);
}

TEST_CASE("interpolated spectra share one grid") {
    GeneratorConfig gen = default_generator_config();
    for (auto& c : gen.classes) c.count = 4;
    const auto set = interpolate_dataset(generate_dataset(gen), InterpolationGrid{}, 2);
    for (const auto& s : set.spectra) CHECK(s.freq == set.grid);
    CHECK(set.grid.size() == 30);
}

TEST_CASE("max-real normalization") {
    GeneratorConfig gen = default_generator_config();
    for (auto& c : gen.classes) c.count = 3;
    const auto set = interpolate_dataset(generate_dataset(gen), InterpolationGrid{});
    const auto raw = raw_feature_matrix(set.spectra);
    REQUIRE(raw.cols() == 60);
    CHECK(raw.columns.front() == "zreal_0");
    CHECK(raw.columns[30] == "zimag_0");
    const auto norm = normalize_max_real(raw);
    for (std::size_t r = 0; r < norm.rows(); ++r) {
        const auto row = norm.X.row(r);
        CHECK(*std::max_element(row.begin(), row.begin() + 30) == doctest::Approx(1.0).epsilon(1e-15));
        for (std::size_t j = 0; j < 30; ++j) {
            const double before = raw.X(r, 30 + j) / raw.X(r, j);
            const double after = norm.X(r, 30 + j) / norm.X(r, j);
            CHECK(std::abs(before - after) <= 1e-12 * std::max(1.0, std::abs(before)));
            if (raw.X(r, 30 + j) < 0) CHECK(norm.X(r, 30 + j) < 0);
        }
    }
    // Scaling a spectrum leaves its normalized row unchanged.
    auto scaled = set.spectra;
    for (auto& z : scaled[0].z) z *= 7.0;
    const auto norm_scaled = normalize_max_real(raw_feature_matrix(scaled));
    for (std::size_t j = 0; j < 60; ++j) CHECK(norm_scaled.X(0, j) == doctest::Approx(norm.X(0, j)).epsilon(1e-14));

    FeatureMatrix bad = raw;
    for (std::size_t j = 0; j < 30; ++j) bad.X(0, j) = -1.0;
    CHECK_THROWS_AS(normalize_max_real(bad), Error);
}

TEST_CASE("min-max normalization") {
    const auto s = arc();
    const auto n = normalize_minmax(s);
    CHECK(*std::min_element(n.re.begin(), n.re.end()) == 0.0);
    CHECK(*std::max_element(n.re.begin(), n.re.end()) == 1.0);
    for (double v : n.im) CHECK((v >= 0.0 && v <= 1.0));
    // Affine maps of either axis do not change the result.
    Spectrum t = s;
    for (auto& z : t.z) z = Complex(3.0 * z.real() + 5.0, 0.5 * z.imag() - 2.0);
    const auto m = normalize_minmax(t);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(m.re[i] == doctest::Approx(n.re[i]).epsilon(1e-12));
        CHECK(m.im[i] == doctest::Approx(n.im[i]).epsilon(1e-12));
    }
    const auto flat = normalize_minmax(from_points({Complex(2, -1), Complex(2, -3)}));
    CHECK(flat.degenerate_re);
    CHECK_FALSE(flat.degenerate_im);
    CHECK(flat.re == std::vector<double>{0.0, 0.0});
}

}
