#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "ddc/evidence.hpp"
#include "ddc/rng.hpp"

TEST_CASE("votes accumulate into Beta(1 + W_u, 1 + W - W_u)") {
    ddc::EvidenceLedger ledger;
    ledger.add_vote("a", 0.5);
    ledger.add_vote("b", 0.25);
    ledger.add_vote("a", 0.75);
    REQUIRE(ledger.total_weight() == Catch::Approx(1.5));
    REQUIRE(ledger.alpha("a") == Catch::Approx(2.25));
    REQUIRE(ledger.beta("a") == Catch::Approx(1.25));
    REQUIRE(ledger.alpha("b") == Catch::Approx(1.25));
    REQUIRE(ledger.beta("b") == Catch::Approx(2.25));
    // Unseen answers sit at the prior.
    REQUIRE(ledger.alpha("zzz") == 1.0);
    REQUIRE(ledger.beta("zzz") == Catch::Approx(2.5));
}

TEST_CASE("weights outside [0, 1] are rejected") {
    ddc::EvidenceLedger ledger;
    REQUIRE_THROWS_AS(ledger.add_vote("a", -0.01), ddc::DomainError);
    REQUIRE_THROWS_AS(ledger.add_vote("a", 1.01), ddc::DomainError);
    REQUIRE_THROWS_AS(ledger.add_vote("a", std::nan("")), ddc::DomainError);
    REQUIRE(ledger.empty());
}

TEST_CASE("leader is the weight argmax with first-registered tie-break") {
    ddc::EvidenceLedger ledger;
    REQUIRE_FALSE(ledger.leader().has_value());
    ledger.add_vote("first", 0.4);
    ledger.add_vote("second", 0.4);
    REQUIRE(*ledger.leader() == "first");
    ledger.add_vote("second", 0.1);
    REQUIRE(*ledger.leader() == "second");
}

TEST_CASE("posterior masses are invariant to vote order") {
    std::vector<std::pair<std::string, double>> votes = {
        {"a", 0.9}, {"b", 0.2}, {"a", 0.3}, {"c", 0.7}, {"b", 0.65}, {"a", 0.05},
    };
    ddc::EvidenceLedger forward;
    for (const auto& [ans, w] : votes) forward.add_vote(ans, w);

    ddc::Rng rng = ddc::Rng::for_stream(77, 0);
    for (int rep = 0; rep < 20; ++rep) {
        for (std::size_t i = votes.size(); i > 1; --i) {
            std::swap(votes[i - 1], votes[rng.index(i)]);
        }
        ddc::EvidenceLedger shuffled;
        for (const auto& [ans, w] : votes) shuffled.add_vote(ans, w);
        for (const char* ans : {"a", "b", "c"}) {
            REQUIRE(shuffled.alpha(ans) == Catch::Approx(forward.alpha(ans)).margin(1e-12));
            REQUIRE(shuffled.beta(ans) == Catch::Approx(forward.beta(ans)).margin(1e-12));
        }
        // No ties here, so the argmax is order-independent too.
        REQUIRE(*shuffled.leader() == *forward.leader());
    }
}

TEST_CASE("leader is invariant to uniform weight scaling") {
    ddc::Rng rng = ddc::Rng::for_stream(78, 0);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::pair<std::string, double>> votes;
        for (int i = 0; i < 12; ++i) {
            votes.emplace_back(std::to_string(rng.index(4)), rng.uniform(0.1, 1.0));
        }
        const double scale = rng.uniform(0.05, 1.0);
        ddc::EvidenceLedger full, scaled;
        for (const auto& [ans, w] : votes) {
            full.add_vote(ans, w);
            scaled.add_vote(ans, w * scale);
        }
        REQUIRE(*full.leader() == *scaled.leader());
    }
}

TEST_CASE("empty ledger continues at the uniform-prior posterior") {
    ddc::EvidenceLedger ledger;
    auto d = ddc::should_stop(ledger, {});
    REQUIRE_FALSE(d.stop);
    REQUIRE(d.posterior == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(d.leader.empty());
}

TEST_CASE("unanimous full-weight votes trip the rule at four, not three") {
    ddc::EvidenceLedger ledger;
    ddc::StopPolicy policy;  // gamma 0.5, tau_stop 0.95
    for (int m = 1; m <= 3; ++m) {
        ledger.add_count_vote("42");
        auto d = ddc::should_stop(ledger, policy);
        INFO("m=" << m << " posterior=" << d.posterior);
        REQUIRE_FALSE(d.stop);
    }
    ledger.add_count_vote("42");
    auto d = ddc::should_stop(ledger, policy);
    // P(p > 1/2) under Beta(5, 1) is 1 - 2^-5.
    REQUIRE(d.posterior == Catch::Approx(0.96875).margin(1e-10));
    REQUIRE(d.stop);
    REQUIRE(d.leader == "42");
}

TEST_CASE("many low-weight agreeing votes still reach the threshold") {
    ddc::EvidenceLedger ledger;
    for (int i = 0; i < 16; ++i) ledger.add_vote("42", 0.3);
    auto d = ddc::should_stop(ledger, {});
    REQUIRE(d.stop);
    REQUIRE(d.posterior > 0.95);
    REQUIRE(d.posterior == Catch::Approx(0.98216).margin(5e-4));
}

TEST_CASE("split evidence holds the decision open") {
    ddc::EvidenceLedger ledger;
    for (int i = 0; i < 6; ++i) {
        ledger.add_count_vote("a");
        ledger.add_count_vote("b");
    }
    auto d = ddc::should_stop(ledger, {});
    REQUIRE_FALSE(d.stop);
    REQUIRE(d.posterior < 0.6);
}

TEST_CASE("stop policy parameters are validated") {
    ddc::EvidenceLedger ledger;
    ledger.add_count_vote("a");
    REQUIRE_THROWS_AS(ddc::should_stop(ledger, {0.0, 0.95}), ddc::ConfigError);
    REQUIRE_THROWS_AS(ddc::should_stop(ledger, {0.5, 1.0}), ddc::ConfigError);
}
