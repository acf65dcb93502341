#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <vector>

#include "ddc/quantiles.hpp"
#include "ddc/rng.hpp"
#include "oracles.hpp"

TEST_CASE("linear-interpolation quantiles on small fixtures") {
    const std::vector<double> v = {0.0, 1.0, 2.0, 3.0};
    REQUIRE(ddc::quantile(v, 0.0) == 0.0);
    REQUIRE(ddc::quantile(v, 1.0) == 3.0);
    REQUIRE(ddc::quantile(v, 0.5) == Catch::Approx(1.5));
    REQUIRE(ddc::quantile(v, 0.25) == Catch::Approx(0.75));
    REQUIRE(ddc::quantile(v, 0.75) == Catch::Approx(2.25));
    // Order of the input must not matter.
    REQUIRE(ddc::quantile({3.0, 0.0, 2.0, 1.0}, 0.75) == Catch::Approx(2.25));
}

TEST_CASE("quantile input validation") {
    REQUIRE_THROWS_AS(ddc::quantile({}, 0.5), ddc::DomainError);
    REQUIRE_THROWS_AS(ddc::quantile({1.0}, -0.1), ddc::DomainError);
    REQUIRE_THROWS_AS(ddc::quantile({1.0}, 1.1), ddc::DomainError);
    REQUIRE_THROWS_AS(ddc::quantile({std::nan("")}, 0.5), ddc::DomainError);
}

TEST_CASE("upper fence fixtures") {
    // Q1 = 2, Q3 = 4, IQR = 2: fence at 7 flags the outlier 100.
    REQUIRE(ddc::tukey_upper_fence({1.0, 2.0, 3.0, 4.0, 100.0}) == Catch::Approx(7.0));
    REQUIRE(ddc::tukey_upper_fence({0.0, 1.0, 2.0, 3.0}) == Catch::Approx(4.5));
}

TEST_CASE("upper fence needs at least four values") {
    REQUIRE_THROWS_AS(ddc::tukey_upper_fence({1.0, 2.0, 3.0}),
                      ddc::InsufficientCalibrationError);
    REQUIRE_NOTHROW(ddc::tukey_upper_fence({1.0, 2.0, 3.0, 4.0}));
}

TEST_CASE("fence multiplier must be finite and non-negative") {
    const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    REQUIRE_THROWS_AS(ddc::tukey_upper_fence(v, -1.0), ddc::ConfigError);
    REQUIRE_THROWS_AS(ddc::tukey_upper_fence(v, std::nan("")), ddc::ConfigError);
    // Multiplier zero degenerates to Q3 itself.
    REQUIRE(ddc::tukey_upper_fence(v, 0.0) == Catch::Approx(3.25));
}

TEST_CASE("random integer lists agree exactly with the rational-index reference") {
    ddc::Rng rng = ddc::Rng::for_stream(555, 2);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 4 + rng.index(97);
        std::vector<double> values;
        values.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            values.push_back(static_cast<double>(rng.index(1000)));
        }
        REQUIRE(ddc::quantile(values, 0.25) == oracle::quantile_linear(values, 1, 4));
        REQUIRE(ddc::quantile(values, 0.75) == oracle::quantile_linear(values, 3, 4));
        REQUIRE(ddc::tukey_upper_fence(values) == oracle::tukey_upper_fence(values));
    }
}
