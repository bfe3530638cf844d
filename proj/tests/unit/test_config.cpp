#include <doctest.h>

#include <functional>

#include "ecmkit/config.hpp"
#include "ecmkit/error.hpp"

using namespace ecmkit;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty object gives the defaults") {
    const auto c = parse_run_config("{}");
    CHECK_FALSE(c.seed.has_value());
    CHECK(c.test_fraction == 0.2);
    CHECK(c.features.select);
    CHECK_FALSE(c.features.normalize);
    CHECK(c.generator.classes.size() == 9);
}

TEST_CASE("written config parses back to the same text") {
    auto c = parse_run_config(R"({"seed": 7, "gbt": {"n_rounds": 12}, "features": {"fdr": 0.01}})");
    CHECK(*c.seed == 7);
    CHECK(c.gbt.n_rounds == 12);
    CHECK(c.features.fdr == 0.01);
    const auto text = run_config_to_json(c);
    CHECK(run_config_to_json(parse_run_config(text)) == text);
}

TEST_CASE("unknown keys and wrong types are rejected") {
    CHECK(code_of([] { parse_run_config(R"({"sed": 1})"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_run_config(R"({"gbt": {"rounds": 1}})"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_run_config(R"({"test_fraction": "big"})"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_run_config(R"({"test_fraction": 1.5})"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_run_config(R"({"generator": {"priors": {"resistance": {"lo": 1}}}})"); }) ==
          ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_run_config("{"); }) == ErrorCode::ParseError);
}

TEST_CASE("seed precedence") {
    RunConfig none;
    RunConfig seeded;
    seeded.seed = 5;
    CHECK(resolve_seed(9, seeded, "3") == 9);
    CHECK(resolve_seed(std::nullopt, seeded, "3") == 5);
    CHECK(resolve_seed(std::nullopt, none, "3") == 3);
    CHECK(resolve_seed(std::nullopt, none, nullptr) == 42);
    CHECK(resolve_seed(std::nullopt, none, "") == 42);
    CHECK(code_of([&] { resolve_seed(std::nullopt, none, "x1"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("the master seed fans out to distinct stage seeds") {
    RunConfig c;
    apply_seed(c, 42);
    CHECK(c.generator.seed == 42);
    CHECK(split_seed(42) != 42);
    CHECK(importance_seed(42) != split_seed(42));
    CHECK(c.forest.seed != c.gbt.seed);
    RunConfig d;
    apply_seed(d, 43);
    CHECK(d.forest.seed != c.forest.seed);
}

}
