#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "ddc/token_event.hpp"

using ddc::TokenEvent;

TEST_CASE("validate_event accepts a well-formed descending list") {
    TokenEvent ev{0, {-0.1, -0.5, -2.0, -2.0, -7.3}, "x"};
    REQUIRE_NOTHROW(ddc::validate_event(ev));
}

TEST_CASE("validate_event rejects structural defects") {
    SECTION("empty list") {
        TokenEvent ev{0, {}, ""};
        REQUIRE_THROWS_AS(ddc::validate_event(ev), ddc::MalformedEventError);
    }
    SECTION("positive entry") {
        TokenEvent ev{0, {0.25, -1.0}, ""};
        REQUIRE_THROWS_AS(ddc::validate_event(ev), ddc::MalformedEventError);
    }
    SECTION("non-finite entry") {
        TokenEvent ev{0, {-1.0, -std::numeric_limits<double>::infinity()}, ""};
        REQUIRE_THROWS_AS(ddc::validate_event(ev), ddc::MalformedEventError);
        TokenEvent nan_ev{0, {std::numeric_limits<double>::quiet_NaN()}, ""};
        REQUIRE_THROWS_AS(ddc::validate_event(nan_ev), ddc::MalformedEventError);
    }
    SECTION("out of order") {
        TokenEvent ev{0, {-2.0, -1.0}, ""};
        REQUIRE_THROWS_AS(ddc::validate_event(ev), ddc::MalformedEventError);
    }
    SECTION("zero is a legal log-probability") {
        TokenEvent ev{0, {0.0, -3.0}, ""};
        REQUIRE_NOTHROW(ddc::validate_event(ev));
    }
}

TEST_CASE("local confidence is exp of the top entry") {
    TokenEvent ev{3, {-0.25, -1.5, -4.0}, "tok"};
    REQUIRE(ddc::local_confidence(ev) == Catch::Approx(std::exp(-0.25)).epsilon(1e-15));
    // Certain token: probability one.
    TokenEvent sure{0, {0.0}, ""};
    REQUIRE(ddc::local_confidence(sure) == 1.0);
}

TEST_CASE("global confidence is the negated mean over all k entries") {
    TokenEvent ev{0, {-1.0, -2.0, -3.0, -6.0}, ""};
    REQUIRE(ddc::global_confidence(ev) == Catch::Approx(3.0).epsilon(1e-15));
    REQUIRE(ddc::global_confidence(ev) >= 0.0);
}

TEST_CASE("confidence accessors reject empty events") {
    TokenEvent ev;
    REQUIRE_THROWS_AS(ddc::local_confidence(ev), ddc::MalformedEventError);
    REQUIRE_THROWS_AS(ddc::global_confidence(ev), ddc::MalformedEventError);
}
