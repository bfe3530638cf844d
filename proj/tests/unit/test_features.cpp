#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ecmkit/datagen.hpp"
#include "ecmkit/error.hpp"
#include "ecmkit/features.hpp"
#include "ecmkit/preprocess.hpp"
#include "ecmkit/random.hpp"
#include "ecmkit/stats.hpp"
#include "../support/oracles.hpp"

using namespace ecmkit;
namespace ft = ecmkit::features;

namespace {

std::vector<double> random_series(Rng& rng, std::size_t n, int levels = 0) {
    std::vector<double> x(n);
    for (auto& v : x) v = levels > 0 ? static_cast<double>(uniform_int(rng, 0, levels - 1)) : standard_normal(rng);
    return x;
}

std::vector<double> iota_vec(std::size_t n) {
    std::vector<double> x(n);
    std::iota(x.begin(), x.end(), 0.0);
    return x;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("number_peaks matches an exhaustive scan") {
    Rng rng(1);
    for (int trial = 0; trial < 3000; ++trial) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 7, 40));
        // Few distinct levels so ties and plateaus occur often.
        const auto x = random_series(rng, n, trial % 2 == 0 ? 4 : 0);
        for (std::size_t support : {1u, 2u, 3u}) {
            CHECK(ft::number_peaks(x, support) == oracle::brute_number_peaks(x, support));
        }
    }
    CHECK(ft::number_peaks(std::vector{0.0, 1.0, 0.0, 1.0, 0.0}) == 2);
    CHECK(ft::number_peaks(std::vector{0.0, 1.0, 1.0, 0.0}) == 0);
    CHECK_THROWS_AS(ft::number_peaks(std::vector{1.0, 2.0}, 1), Error);
}

TEST_CASE("energy ratios partition the total") {
    Rng rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 10, 45));
        const auto x = random_series(rng, n);
        double sum = 0.0;
        for (std::size_t focus = 0; focus < 10; ++focus) {
            const auto v = ft::energy_ratio_by_chunks(x, 10, focus);
            CHECK_FALSE(v.degenerate);
            CHECK(v.value >= 0.0);
            CHECK(v.value <= 1.0);
            sum += v.value;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    // 12 values in 10 segments: the first two segments take two values each.
    std::vector<double> x(12, 0.0);
    x[0] = x[1] = 1.0;
    CHECK(ft::energy_ratio_by_chunks(x, 10, 0).value == 1.0);
    const auto zero = ft::energy_ratio_by_chunks(std::vector<double>(10, 0.0), 10, 3);
    CHECK(zero.degenerate);
    CHECK(zero.value == 0.0);
}

TEST_CASE("linear trend r-value equals the Pearson formula") {
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 3, 60));
        auto y = random_series(rng, n);
        for (std::size_t i = 0; i < n; ++i) y[i] += 0.05 * static_cast<double>(i) * (trial % 3 - 1);
        const auto fit = ft::linear_trend(y);
        CHECK(std::abs(fit.rvalue - oracle::pearson(iota_vec(n), y)) < 1e-9);
    }
    // Hand value: y = [1, 3, 2, 5] against t = [0, 1, 2, 3] gives r = 0.8315218406...
    const auto fit = ft::linear_trend(std::vector{1.0, 3.0, 2.0, 5.0});
    CHECK(fit.rvalue == doctest::Approx(0.8315218406).epsilon(1e-9));
    CHECK(fit.slope == doctest::Approx(1.1));
    CHECK(fit.intercept == doctest::Approx(1.1));
    CHECK(std::isnan(ft::linear_trend(std::vector{2.0, 2.0, 2.0}).rvalue));
}

TEST_CASE("aggregated linear trend") {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        const auto x = random_series(rng, 30);
        for (auto agg : {ft::Aggregate::Max, ft::Aggregate::Min, ft::Aggregate::Mean}) {
            const double r = ft::agg_linear_trend_rvalue(x, 5, agg);
            CHECK(r >= -1.0);
            CHECK(r <= 1.0);
        }
        std::vector<double> maxima;
        for (std::size_t c = 0; c < 3; ++c) maxima.push_back(*std::max_element(x.begin() + c * 10, x.begin() + c * 10 + 10));
        CHECK(std::abs(ft::agg_linear_trend_rvalue(x, 10, ft::Aggregate::Max) - oracle::pearson(iota_vec(3), maxima)) <
              1e-9);
    }
    // An incomplete tail chunk is dropped.
    auto x = iota_vec(25);
    x[24] = -100.0;
    CHECK(ft::agg_linear_trend_rvalue(x, 10, ft::Aggregate::Min) == doctest::Approx(1.0));
    CHECK_THROWS_AS(ft::agg_linear_trend_rvalue(std::vector<double>(5, 1.0), 10), Error);
}

TEST_CASE("AR coefficients match the normal equations") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_series(rng, 30);
        // Two-lag oracle: solve the 3x3 normal equations by Cramer's rule.
        double s[3][3] = {}, b[3] = {};
        for (std::size_t t = 2; t < x.size(); ++t) {
            const double row[3] = {1.0, x[t - 1], x[t - 2]};
            for (int i = 0; i < 3; ++i) {
                b[i] += row[i] * x[t];
                for (int j = 0; j < 3; ++j) s[i][j] += row[i] * row[j];
            }
        }
        auto det = [](double m[3][3]) {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        };
        const double d = det(s);
        const auto coef = ft::ar_coefficients(x, 2);
        for (int k = 0; k < 3; ++k) {
            double m[3][3];
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) m[i][j] = j == k ? b[i] : s[i][j];
            }
            CHECK(coef[static_cast<std::size_t>(k)] == doctest::Approx(det(m) / d).epsilon(1e-9));
        }
    }
}

TEST_CASE("AR(1) estimates on simulated processes") {
    Rng rng(6);
    const int seeds = 1000;
    int inside = 0;
    double sum_phi = 0.0;
    int white_small = 0;
    double sum_white = 0.0;
    for (int s = 0; s < seeds; ++s) {
        std::vector<double> x(30);
        x[0] = standard_normal(rng) * 0.1 / std::sqrt(1 - 0.64);
        for (std::size_t t = 1; t < x.size(); ++t) x[t] = 0.8 * x[t - 1] + 0.1 * standard_normal(rng);
        const double phi = ft::ar_coefficients(x, 1)[1];
        inside += phi >= 0.6 && phi <= 1.0 ? 1 : 0;
        sum_phi += phi;

        const double w = ft::ar_coefficients(random_series(rng, 30), 1)[1];
        white_small += std::abs(w) <= 0.5 ? 1 : 0;
        sum_white += w;
    }
    // With 29 usable pairs the least-squares estimate of 0.8 has a downward
    // bias near (1 + 3 phi) / n = 0.11 and a spread near 0.11, so only about
    // three quarters of the runs land in [0.6, 1].
    CHECK(inside >= 0.65 * seeds);
    CHECK(sum_phi / seeds == doctest::Approx(0.69).epsilon(0.05));
    CHECK(white_small >= 0.99 * seeds);
    CHECK(std::abs(sum_white / seeds) < 0.05);
}

TEST_CASE("AR fit of a constant series reproduces it") {
    const std::vector<double> x(30, 4.2);
    const auto coef = ft::ar_coefficients(x, 10);
    double predicted = coef[0];
    for (std::size_t lag = 1; lag <= 10; ++lag) predicted += coef[lag] * 4.2;
    CHECK(predicted == doctest::Approx(4.2).epsilon(1e-9));
    CHECK_THROWS_AS(ft::ar_coefficients(std::vector<double>(15, 1.0), 10), Error);
}

TEST_CASE("summary statistics agree with sort-based oracles") {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = random_series(rng, static_cast<std::size_t>(uniform_int(rng, 1, 40)));
        auto sorted = x;
        std::sort(sorted.begin(), sorted.end());
        CHECK(ft::minimum(x) == sorted.front());
        CHECK(ft::maximum(x) == sorted.back());
        const std::size_t n = sorted.size();
        const double med = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        CHECK(ft::median(x) == doctest::Approx(med));
        double energy = 0;
        for (double v : x) energy += v * v;
        CHECK(ft::abs_energy(x) == doctest::Approx(energy));
        CHECK(ft::count_above_mean(x) + ft::count_below_mean(x) <= n);
    }
    CHECK(ft::minimum(std::vector{3.0, 1.0, 2.0}) == 1.0);
    CHECK(ft::minimum(std::vector{2.5, 2.5}) == 2.5);
    CHECK(ft::variance(std::vector{1.0, 3.0}) == 1.0);
    CHECK(ft::mean_abs_change(std::vector{1.0, 3.0, 2.0}) == 1.5);
    CHECK(ft::mean_change(std::vector{1.0, 3.0, 2.0}) == 0.5);
    CHECK_THROWS_AS(ft::minimum(std::vector<double>{}), Error);
}

TEST_CASE("skewness uses the adjusted Fisher-Pearson estimator") {
    // For [1, 2, 3, 10]: m2 = 12.5, m3 = 45, g1 = m3 / m2^1.5 = 1.01823,
    // G1 = g1 * sqrt(n (n - 1)) / (n - 2) = 1.763632614803888.
    const double g = ft::skewness(std::vector{1.0, 2.0, 3.0, 10.0});
    CHECK(g == doctest::Approx(1.763632614803888).epsilon(1e-12));
}

TEST_CASE("default bank holds the seven named features") {
    const auto& bank = ft::default_bank();
    CHECK(bank.size() == 94);
    std::set<std::string> names;
    for (const auto& f : bank) names.insert(f.name);
    CHECK(names.size() == bank.size());
    for (const char* name : {
             "zreal__agg_linear_trend__attr_\"rvalue\"__chunk_len_10__f_agg_\"max\"",
             "zreal__agg_linear_trend__attr_\"rvalue\"__chunk_len_10__f_agg_\"min\"",
             "zimag__number_peaks__n_1",
             "zreal__energy_ratio_by_chunks__num_segments_10__segment_focus_9",
             "zreal__ar_coefficient__coeff_0__k_10",
             "zimag__ar_coefficient__coeff_1__k_10",
             "zreal__minimum",
         }) {
        CAPTURE(name);
        CHECK(names.count(name) == 1);
    }
    CHECK_THROWS_AS(ft::find_feature("zreal__nonsense"), Error);
}

TEST_CASE("feature extraction is a pure function of the spectrum") {
    GeneratorConfig gen = default_generator_config();
    for (auto& c : gen.classes) c.count = 3;
    const auto set = interpolate_dataset(generate_dataset(gen), InterpolationGrid{});
    const auto& bank = ft::default_bank();
    const auto all = ft::featurize(set.spectra, bank, 3);
    REQUIRE(all.matrix.rows() == set.spectra.size());
    std::vector<Spectrum> reversed(set.spectra.rbegin(), set.spectra.rend());
    const auto rev = ft::featurize(reversed, bank, 1);
    for (std::size_t r = 0; r < all.matrix.rows(); ++r) {
        const auto a = all.matrix.X.row(r);
        const auto b = rev.matrix.X.row(all.matrix.rows() - 1 - r);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    const auto one = ft::extract_features(set.spectra[0], std::vector{ft::find_feature("zreal__minimum")});
    CHECK(one.values.size() == 1);
    double lo = set.spectra[0].z[0].real();
    for (auto z : set.spectra[0].z) lo = std::min(lo, z.real());
    CHECK(one.values[0] == lo);
}

TEST_CASE("degenerate features become zero and are counted") {
    Spectrum s;
    s.freq = log_grid(30, 10, 1e5);
    s.z.assign(30, Complex(5.0, 0.0));
    const auto v = ft::extract_features(s, std::vector{ft::find_feature("zimag__energy_ratio_by_chunks__num_segments_10__segment_focus_2"),
                                                       ft::find_feature("zreal__linear_trend__attr_\"rvalue\"")});
    CHECK(v.values == std::vector{0.0, 0.0});
    CHECK(v.degenerate == std::vector<bool>{true, true});
}

TEST_CASE("Mann-Whitney agrees with a direct pair count") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = random_series(rng, 12, 5);
        const auto y = random_series(rng, 9, 5);
        double u = 0;
        for (double a : x) {
            for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
        }
        CHECK(stats::mann_whitney_u(x, y).u == doctest::Approx(u));
    }
    // Large separated samples give a tiny p-value, identical ones p = 1.
    std::vector<double> lo(40), hi(40);
    std::iota(lo.begin(), lo.end(), 0.0);
    std::iota(hi.begin(), hi.end(), 100.0);
    CHECK(stats::mann_whitney_u(lo, hi).p_value < 1e-10);
    CHECK(stats::mann_whitney_u(std::vector(5, 1.0), std::vector(5, 1.0)).p_value == 1.0);
}

TEST_CASE("Benjamini-Yekutieli step-up") {
    // m = 4, c(m) = 1 + 1/2 + 1/3 + 1/4 = 2.0833; thresholds k * 0.05 / (4 c).
    const std::vector<double> p{0.001, 0.012, 0.02, 0.9};
    const auto sel = stats::benjamini_yekutieli(p, 0.05);
    CHECK(sel == std::vector<bool>{true, true, false, false});
}

TEST_CASE("relevance selection") {
    Rng rng(10);
    FeatureMatrix m;
    const std::size_t n = 300;
    m.X = Matrix(n, 3);
    m.columns = {"informative", "noise", "constant"};
    for (std::size_t r = 0; r < n; ++r) {
        const int label = static_cast<int>(r % 3);
        m.labels.push_back("c" + std::to_string(label));
        m.X(r, 0) = label + 0.01 * standard_normal(rng);
        m.X(r, 1) = standard_normal(rng);
        m.X(r, 2) = 1.0;
    }
    const auto table = ft::select_relevant(m);
    CHECK(table.selected[0]);
    CHECK_FALSE(table.selected[2]);
    CHECK(table.p_values[2] == 1.0);

    FeatureMatrix one_class = m;
    std::fill(one_class.labels.begin(), one_class.labels.end(), "a");
    CHECK_THROWS_AS(ft::select_relevant(one_class), Error);
}

TEST_CASE("pure noise next to informative features is rejected at least 95% of the time") {
    Rng rng(11);
    const std::size_t n = 500;
    const std::size_t informative = 20;
    FeatureMatrix m;
    m.X = Matrix(n, informative + 1);
    for (std::size_t c = 0; c < informative; ++c) m.columns.push_back("signal_" + std::to_string(c));
    m.columns.push_back("noise");
    for (std::size_t r = 0; r < n; ++r) {
        m.labels.push_back("c" + std::to_string(r % 9));
        for (std::size_t c = 0; c < informative; ++c) m.X(r, c) = static_cast<double>(r % 9) + standard_normal(rng);
    }
    int rejected = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        for (std::size_t r = 0; r < n; ++r) m.X(r, informative) = standard_normal(rng);
        const auto table = ft::select_relevant(m);
        CHECK(table.selected_indices().size() >= informative);
        rejected += table.selected.back() ? 0 : 1;
    }
    CHECK(rejected >= 0.95 * trials);
}

TEST_CASE("a lone pure-noise feature is rejected at the nominal rate") {
    // With a single feature the procedure is a level-0.05 test, so about 95%
    // of null trials reject; 0.92 leaves room for sampling error.
    Rng rng(12);
    int rejected = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        FeatureMatrix m;
        m.X = Matrix(500, 1);
        m.columns = {"noise"};
        for (std::size_t r = 0; r < 500; ++r) {
            m.labels.push_back("c" + std::to_string(r % 9));
            m.X(r, 0) = standard_normal(rng);
        }
        rejected += ft::select_relevant(m).selected[0] ? 0 : 1;
    }
    CHECK(rejected >= 0.92 * trials);
}

}
