#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/incomplete_beta.hpp"

namespace ddc {

// Accumulated per-answer evidence under a uniform Beta(1,1) prior. For an
// answer u with cumulative weight W_u out of total W, the posterior on its
// winning probability is Beta(1 + W_u, 1 + (W - W_u)). Entries keep
// registration order so argmax ties resolve to the first-registered answer.
class EvidenceLedger {
   public:
    // Adds a confidence-weighted vote. Weight must be finite and in [0, 1].
    void add_vote(const std::string& answer, double weight) {
        if (!std::isfinite(weight) || weight < 0.0 || weight > 1.0) {
            throw DomainError("vote weight must be in [0, 1], got " + std::to_string(weight));
        }
        auto it = index_.find(answer);
        if (it == index_.end()) {
            index_.emplace(answer, entries_.size());
            entries_.emplace_back(answer, weight);
        } else {
            entries_[it->second].second += weight;
        }
        total_ += weight;
    }

    // Frequency-based comparator update: every vote counts 1.0.
    void add_count_vote(const std::string& answer) { add_vote(answer, 1.0); }

    bool empty() const { return entries_.empty(); }
    std::size_t distinct_answers() const { return entries_.size(); }
    double total_weight() const { return total_; }

    double weight_of(const std::string& answer) const {
        auto it = index_.find(answer);
        return it == index_.end() ? 0.0 : entries_[it->second].second;
    }

    double alpha(const std::string& answer) const { return 1.0 + weight_of(answer); }
    double beta(const std::string& answer) const { return 1.0 + (total_ - weight_of(answer)); }

    // Leading answer: argmax of accumulated weight, first-registered wins ties.
    std::optional<std::string> leader() const {
        if (entries_.empty()) return std::nullopt;
        std::size_t best = 0;
        for (std::size_t i = 1; i < entries_.size(); ++i) {
            if (entries_[i].second > entries_[best].second) best = i;
        }
        return entries_[best].first;
    }

    // (answer, cumulative weight) in registration order.
    const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

   private:
    std::vector<std::pair<std::string, double>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    double total_ = 0.0;
};

// Termination policy: stop once the leader holds more than a gamma share of
// the posterior with probability above tau_stop.
struct StopPolicy {
    double gamma = 0.5;
    double tau_stop = 0.95;

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0, 1)");
        if (!(tau_stop > 0.0 && tau_stop < 1.0)) throw ConfigError("tau_stop must be in (0, 1)");
    }
};

struct StopDecision {
    bool stop = false;
    std::string leader;
    // P(p_leader > gamma | evidence); 0.5 for an empty ledger (uniform prior).
    double posterior = 0.5;
};

// Evaluates the stopping rule: stop iff 1 - I_gamma(alpha_u*, beta_u*)
// exceeds tau_stop for the leading answer u*. An empty ledger continues.
inline StopDecision should_stop(const EvidenceLedger& ledger, const StopPolicy& policy) {
    policy.validate();
    StopDecision decision;
    auto leader = ledger.leader();
    if (!leader) {
        decision.posterior = 1.0 - reg_inc_beta(policy.gamma, 1.0, 1.0);
        return decision;
    }
    decision.leader = *leader;
    decision.posterior =
        1.0 - reg_inc_beta(policy.gamma, ledger.alpha(*leader), ledger.beta(*leader));
    decision.stop = decision.posterior > policy.tau_stop;
    return decision;
}

}  // namespace ddc
