#include <doctest.h>

#include "ecmkit/error.hpp"
#include "ecmkit/metrics.hpp"
#include "ecmkit/random.hpp"

using namespace ecmkit;

namespace {

ConfusionMatrix two_class() {
    ConfusionMatrix cm;
    cm.classes = {"a", "b"};
    cm.counts = {{8, 2}, {3, 7}};
    return cm;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("hand-computed two-class example") {
    const auto s = scores(two_class());
    REQUIRE(s.per_class.size() == 2);
    CHECK(s.per_class[0].recall == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(s.per_class[1].recall == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(s.per_class[0].precision == doctest::Approx(8.0 / 11.0));
    CHECK(s.per_class[1].precision == doctest::Approx(7.0 / 9.0));
    // F1 = 2PR/(P+R): 16/21 and 14/19; macro = 0.74937...
    CHECK(s.per_class[0].f1 == doctest::Approx(16.0 / 21.0));
    CHECK(s.per_class[1].f1 == doctest::Approx(14.0 / 19.0));
    CHECK(std::abs(s.f1_macro - 0.7493) < 1e-3);
    CHECK(s.accuracy == doctest::Approx(0.75));
    CHECK(s.f1_weighted == doctest::Approx(0.5 * (16.0 / 21.0 + 14.0 / 19.0)));
}

TEST_CASE("confusion from string labels") {
    const std::vector<std::string> truth{"a", "a", "b", "c", "c"};
    const std::vector<std::string> pred{"a", "b", "b", "c", "a"};
    const auto cm = confusion(truth, pred, {"a", "b", "c"});
    CHECK(cm.counts == std::vector<std::vector<std::size_t>>{{1, 1, 0}, {0, 1, 0}, {1, 0, 1}});
    CHECK(cm.total() == 5);
    CHECK(cm.support(2) == 2);
    CHECK(cm.predicted(0) == 2);
    const auto rows = cm.row_normalized();
    CHECK(rows[0][0] == 0.5);
    CHECK_THROWS_AS(confusion(truth, std::vector<std::string>{"a"}, {"a", "b", "c"}), Error);
    CHECK_THROWS_AS(confusion(std::vector<std::string>{"z"}, std::vector<std::string>{"a"}, {"a"}), Error);
}

TEST_CASE("weighted recall equals accuracy") {
    Rng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = static_cast<std::size_t>(uniform_int(rng, 2, 9));
        const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 200));
        std::vector<int> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(uniform_int(rng, 0, static_cast<std::int64_t>(k) - 1));
            p[i] = uniform01(rng) < 0.5 ? y[i] : static_cast<int>(uniform_int(rng, 0, static_cast<std::int64_t>(k) - 1));
        }
        const auto s = scores(confusion(y, p, k));
        CHECK(std::abs(s.recall_weighted - s.accuracy) < 1e-12);
    }
}

TEST_CASE("zero denominators give zero scores") {
    ConfusionMatrix cm;
    cm.classes = {"a", "b", "c"};
    cm.counts = {{5, 0, 0}, {0, 0, 0}, {2, 0, 0}};
    const auto s = scores(cm);
    CHECK(s.per_class[1].precision == 0.0);
    CHECK(s.per_class[1].recall == 0.0);
    CHECK(s.per_class[1].f1 == 0.0);
    CHECK(s.per_class[2].precision == 0.0);
    CHECK(s.per_class[2].f1 == 0.0);
    ConfusionMatrix empty;
    empty.classes = {"a"};
    empty.counts = {{0}};
    CHECK_THROWS_AS(scores(empty), Error);
}

TEST_CASE("csv reports") {
    const auto cm = two_class();
    CHECK(confusion_csv(cm) == "true\\predicted,a,b\na,8,2\nb,3,7\n");
    const auto csv = scores_csv(cm, scores(cm));
    CHECK(csv.find("macro") != std::string::npos);
    CHECK(csv.find("weighted") != std::string::npos);
    CHECK(csv.find("accuracy") != std::string::npos);
}

}
