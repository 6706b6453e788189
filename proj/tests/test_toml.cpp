#include <catch2/catch_amalgamated.hpp>

#include "mcdlab/toml.hpp"

using namespace mcdlab;

TEST_CASE("parses scalars, sections and arrays", "[toml]") {
    const auto t = TomlTable::parse(R"(
# experiment
scenario = "single"   # inline comment
seed = 42

[dataset]
sigma = 1.5
n = 3200
label = "Y #1"

[network]
hidden = [64, 64]
last_layer_bias = false
)");
    REQUIRE(t.get_string("scenario") == "single");
    REQUIRE(t.get_int("seed") == 42);
    REQUIRE(t.get_double("dataset.sigma") == 1.5);
    REQUIRE(t.get_double("dataset.n") == 3200.0);  // ints promote
    REQUIRE(t.get_string("dataset.label") == "Y #1");
    REQUIRE(t.get_int_array("network.hidden") == std::vector<std::int64_t>{64, 64});
    REQUIRE_FALSE(t.get_bool("network.last_layer_bias"));
    REQUIRE(t.contains("dataset.n"));
    REQUIRE_FALSE(t.contains("dataset.mu"));
}

TEST_CASE("scientific notation and signs", "[toml]") {
    const auto t = TomlTable::parse("lr = 1e-4\nneg = -2.5\nplus = 3\n");
    REQUIRE(t.get_double("lr") == 1e-4);
    REQUIRE(t.get_double("neg") == -2.5);
    REQUIRE(t.get_int("plus") == 3);
}

TEST_CASE("defaults through get_or", "[toml]") {
    const auto t = TomlTable::parse("a = 1\n");
    REQUIRE(t.get_or<std::int64_t>("a", 9) == 1);
    REQUIRE(t.get_or<std::int64_t>("b", 9) == 9);
    REQUIRE(t.get_or<std::string>("c", "x") == "x");
}

TEST_CASE("malformed input is rejected", "[toml]") {
    REQUIRE_THROWS_AS(TomlTable::parse("key value\n"), ValidationError);
    REQUIRE_THROWS_AS(TomlTable::parse("k = \"unterminated\n"), ValidationError);
    REQUIRE_THROWS_AS(TomlTable::parse("k = zzz\n"), ValidationError);
    REQUIRE_THROWS_AS(TomlTable::parse("k = 1\nk = 2\n"), ValidationError);
    REQUIRE_THROWS_AS(TomlTable::parse("[unclosed\nk = 1\n"), ValidationError);
    REQUIRE_THROWS_AS(TomlTable::parse("= 5\n"), ValidationError);
}

TEST_CASE("missing and mistyped keys raise", "[toml]") {
    const auto t = TomlTable::parse("a = 1\ns = \"x\"\n");
    REQUIRE_THROWS_AS(t.get_int("missing"), ValidationError);
    REQUIRE_THROWS_AS(t.get_int("s"), ValidationError);
    REQUIRE_THROWS_AS(t.get_double("s"), ValidationError);
}
