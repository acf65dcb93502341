#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ddc/errors.hpp"

namespace ddc {

// One generation step of a reasoning path: the top-k log-probabilities
// reported by the model for this position, ordered descending, natural log.
struct TokenEvent {
    std::size_t position = 0;
    std::vector<double> top_logprobs;
    std::string token_text;
};

// Structural validation. Throws MalformedEventError if the entry list is
// empty, contains a positive or non-finite value, or is not sorted
// non-increasing.
inline void validate_event(const TokenEvent& event) {
    if (event.top_logprobs.empty()) {
        throw MalformedEventError("token event has no log-probabilities");
    }
    double prev = 0.0;
    bool first = true;
    for (double lp : event.top_logprobs) {
        if (!std::isfinite(lp) || lp > 0.0) {
            throw MalformedEventError("log-probability out of range: " + std::to_string(lp));
        }
        if (!first && lp > prev) {
            throw MalformedEventError("top log-probabilities not sorted non-increasing");
        }
        prev = lp;
        first = false;
    }
}

// Maximum token probability, exp of the top entry. Always in (0, 1].
inline double local_confidence(const TokenEvent& event) {
    if (event.top_logprobs.empty()) {
        throw MalformedEventError("token event has no log-probabilities");
    }
    return std::exp(event.top_logprobs.front());
}

// Negative average log-probability over the top-k entries. Non-negative.
inline double global_confidence(const TokenEvent& event) {
    if (event.top_logprobs.empty()) {
        throw MalformedEventError("token event has no log-probabilities");
    }
    double sum = 0.0;
    for (double lp : event.top_logprobs) sum += lp;
    return -sum / static_cast<double>(event.top_logprobs.size());
}

}  // namespace ddc
