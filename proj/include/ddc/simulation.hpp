#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/config.hpp"
#include "ddc/engine.hpp"
#include "ddc/errors.hpp"
#include "ddc/evidence.hpp"
#include "ddc/rng.hpp"
#include "ddc/synthetic.hpp"

namespace ddc {

// Both sides of the acceleration condition: weighted evidence separates
// faster than raw frequency when LHS > RHS.
struct ConditionCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// lhs = (p*mu_c - q*mu_i) / sqrt(p*m2_c + q*m2_i), rhs = (p - q) / sqrt(4pq)
// with q = 1 - p and m2 the second raw moments of the weight distributions.
inline ConditionCheck sufficient_condition(double p, double mu_c, double mu_i, double m2_c,
                                           double m2_i) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("p must be in (0, 1)");
    if (!(mu_c > 0.0 && mu_c < 1.0) || !(mu_i > 0.0 && mu_i < 1.0)) {
        throw DomainError("weight means must be in (0, 1)");
    }
    // Weights live in [0, 1]: E[w^2] <= E[w], and E[w^2] >= E[w]^2 always.
    const double slack = 1e-12;
    if (m2_c > mu_c + slack || m2_i > mu_i + slack || m2_c < mu_c * mu_c - slack ||
        m2_i < mu_i * mu_i - slack) {
        throw DomainError("inconsistent weight moments");
    }
    const double q = 1.0 - p;
    ConditionCheck out;
    out.lhs = (p * mu_c - q * mu_i) / std::sqrt(p * m2_c + q * m2_i);
    out.rhs = (p - q) / std::sqrt(4.0 * p * q);
    out.holds = out.lhs > out.rhs;
    return out;
}

// Point-mass convenience: m2 = mu^2.
inline ConditionCheck sufficient_condition(double p, double mu_c, double mu_i) {
    return sufficient_condition(p, mu_c, mu_i, mu_c * mu_c, mu_i * mu_i);
}

// Width-only stopping policy for the vote simulations. min_votes mirrors the
// engine's init budget: no stop check until that many votes are in.
struct StopPolicySim {
    double gamma = 0.5;
    double tau_stop = 0.95;
    std::size_t budget = 512;   // hard cap on votes per trial
    std::size_t min_votes = 1;  // first index at which the stop rule may fire
    std::size_t sc_budget = 16; // fixed-width self-consistency reference
    double weight_scale = 1.0;  // multiplies every drawn weight (safety-brake probe)

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0, 1)");
        if (!(tau_stop > 0.0 && tau_stop < 1.0)) throw ConfigError("tau_stop must be in (0, 1)");
        if (budget < 1) throw ConfigError("budget must be >= 1");
        if (min_votes < 1 || min_votes > budget) {
            throw ConfigError("min_votes must satisfy 1 <= min_votes <= budget");
        }
        if (sc_budget < 1 || sc_budget > budget) {
            throw ConfigError("sc_budget must satisfy 1 <= sc_budget <= budget");
        }
        if (!(weight_scale > 0.0 && weight_scale <= 1.0)) {
            throw ConfigError("weight_scale must be in (0, 1]");
        }
    }
};

struct TrialOutcome {
    std::size_t trial = 0;
    std::size_t cow_n = 0;  // votes consumed until the weighted rule stopped
    std::size_t frq_n = 0;  // votes consumed until the frequency rule stopped
    bool cow_correct = false;
    bool frq_correct = false;
    bool sc_correct = false;
};

struct StoppingSummary {
    std::size_t trials = 0;
    double mean_n_cow = 0.0;
    double mean_n_frq = 0.0;
    double accuracy_cow = 0.0;
    double accuracy_frq = 0.0;
    double accuracy_sc = 0.0;
    std::size_t sc_budget = 0;
    std::vector<TrialOutcome> per_trial;
};

namespace detail {

// Walks one vote stream under the stop rule; returns votes consumed and the
// leader at exit (budget exhaustion included).
inline std::size_t stopping_time(const std::vector<VoteDraw>& votes, bool weighted,
                                 const StopPolicySim& sim, std::string* leader_out) {
    EvidenceLedger ledger;
    const StopPolicy policy{sim.gamma, sim.tau_stop};
    std::size_t n = 0;
    for (const auto& v : votes) {
        ledger.add_vote(v.answer, weighted ? v.weight * sim.weight_scale : 1.0);
        ++n;
        if (n >= sim.min_votes && should_stop(ledger, policy).stop) break;
    }
    if (leader_out) {
        auto leader = ledger.leader();
        *leader_out = leader ? *leader : std::string();
    }
    return n;
}

inline std::string majority_answer(const std::vector<VoteDraw>& votes, std::size_t budget) {
    EvidenceLedger counts;
    for (std::size_t i = 0; i < budget && i < votes.size(); ++i) {
        counts.add_count_vote(votes[i].answer);
    }
    auto leader = counts.leader();
    return leader ? *leader : std::string();
}

}  // namespace detail

// Paired comparison of the weighted stop rule (CoW), the frequency stop rule
// (FrQ), and fixed-budget self-consistency (SC), all fed the same per-trial
// vote stream.
inline StoppingSummary compare_stopping(const GeneratorSpec& spec, std::size_t trials,
                                        const StopPolicySim& sim) {
    spec.validate();
    sim.validate();
    if (trials < 1) throw DomainError("trials must be >= 1");

    StoppingSummary summary;
    summary.trials = trials;
    summary.sc_budget = sim.sc_budget;
    summary.per_trial.reserve(trials);

    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng = Rng::for_stream(spec.seed, t);
        std::vector<VoteDraw> votes(sim.budget);
        for (auto& v : votes) v = draw_vote(rng, spec);

        TrialOutcome out;
        out.trial = t;
        std::string cow_leader, frq_leader;
        out.cow_n = detail::stopping_time(votes, true, sim, &cow_leader);
        out.frq_n = detail::stopping_time(votes, false, sim, &frq_leader);
        out.cow_correct = cow_leader == gold_answer();
        out.frq_correct = frq_leader == gold_answer();
        out.sc_correct = detail::majority_answer(votes, sim.sc_budget) == gold_answer();

        summary.mean_n_cow += static_cast<double>(out.cow_n);
        summary.mean_n_frq += static_cast<double>(out.frq_n);
        summary.accuracy_cow += out.cow_correct ? 1.0 : 0.0;
        summary.accuracy_frq += out.frq_correct ? 1.0 : 0.0;
        summary.accuracy_sc += out.sc_correct ? 1.0 : 0.0;
        summary.per_trial.push_back(out);
    }
    const auto n = static_cast<double>(trials);
    summary.mean_n_cow /= n;
    summary.mean_n_frq /= n;
    summary.accuracy_cow /= n;
    summary.accuracy_frq /= n;
    summary.accuracy_sc /= n;
    return summary;
}

struct SeparationRates {
    double prune_rate_degen = 0.0;
    double survival_rate_dip = 0.0;
    double survival_rate_stable = 0.0;
    GateThresholds thresholds;
};

namespace detail {

// Fraction of paths the calibrated gate leaves alive (completed, including
// fast passes). Paths are drawn from dedicated stream indices far from the
// calibration range so calibration and evaluation never share draws.
inline double gated_survival_rate(const GeneratorSpec& spec, std::size_t paths,
                                  const EngineConfig& cfg, const GateThresholds& thresholds,
                                  std::uint64_t stream_offset) {
    std::size_t survived = 0;
    for (std::size_t i = 0; i < paths; ++i) {
        SyntheticStream stream(spec, stream_offset + i);
        const PathRecord rec =
            walk_path(stream, i, false, cfg, nullptr, &thresholds, nullptr);
        if (rec.status == PathStatus::completed) ++survived;
    }
    return static_cast<double>(survived) / static_cast<double>(paths);
}

}  // namespace detail

// Calibrates thresholds from a uniform family mixture, then measures how the
// gate treats each family on fresh paths.
inline SeparationRates pruning_separation_experiment(const GeneratorSpec& degen,
                                                     const GeneratorSpec& dip,
                                                     const GeneratorSpec& stable,
                                                     std::size_t paths_per_family,
                                                     const EngineConfig& cfg,
                                                     std::size_t init_paths = 48) {
    cfg.validate();
    if (paths_per_family < 1) throw DomainError("paths_per_family must be >= 1");

    MixtureSource mix({stable, dip, degen}, stable.seed);
    WindowPools pools;
    for (std::size_t i = 0; i < init_paths; ++i) {
        auto stream = mix.start_path();
        walk_path(*stream, i, true, cfg, nullptr, nullptr, &pools);
    }
    SeparationRates rates;
    rates.thresholds =
        calibrate_gate(pools.local_means, pools.global_means, pools.risk_scores,
                       cfg.pass_percentile, cfg.drop_percentile, cfg.tukey_multiplier);

    const std::uint64_t offset = 1u << 20;  // clear of the calibration indices
    rates.prune_rate_degen =
        1.0 - detail::gated_survival_rate(degen, paths_per_family, cfg, rates.thresholds, offset);
    rates.survival_rate_dip =
        detail::gated_survival_rate(dip, paths_per_family, cfg, rates.thresholds, offset);
    rates.survival_rate_stable =
        detail::gated_survival_rate(stable, paths_per_family, cfg, rates.thresholds, offset);
    return rates;
}

// Machine-readable outputs for the CLI: one line per trial plus an aggregate.
inline std::string trial_records_jsonl(const StoppingSummary& summary) {
    std::string out;
    for (const auto& t : summary.per_trial) {
        nlohmann::ordered_json j;
        j["trial"] = t.trial;
        j["cow_n"] = t.cow_n;
        j["frq_n"] = t.frq_n;
        j["cow_correct"] = t.cow_correct;
        j["frq_correct"] = t.frq_correct;
        j["sc_correct"] = t.sc_correct;
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json summary_json(const GeneratorSpec& spec, const StopPolicySim& sim,
                                           const StoppingSummary& summary) {
    const auto r = [](double v) { return detail::round_for_report(v); };
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["spec"]["p"] = r(spec.p);
    j["spec"]["mu_c"] = r(spec.mu_c);
    j["spec"]["mu_i"] = r(spec.mu_i);
    j["spec"]["weight_noise"] = r(spec.weight_noise);
    j["spec"]["distractors"] = spec.distractors;
    j["spec"]["seed"] = spec.seed;
    j["policy"]["gamma"] = r(sim.gamma);
    j["policy"]["tau_stop"] = r(sim.tau_stop);
    j["policy"]["budget"] = sim.budget;
    j["policy"]["min_votes"] = sim.min_votes;
    j["policy"]["sc_budget"] = sim.sc_budget;
    j["policy"]["weight_scale"] = r(sim.weight_scale);
    j["trials"] = summary.trials;
    j["mean_n_cow"] = r(summary.mean_n_cow);
    j["mean_n_frq"] = r(summary.mean_n_frq);
    j["accuracy_cow"] = r(summary.accuracy_cow);
    j["accuracy_frq"] = r(summary.accuracy_frq);
    j["accuracy_sc"] = r(summary.accuracy_sc);
    // Vote streams carry no tokens; vote counts stand in for token totals.
    j["mean_votes_cow"] = r(summary.mean_n_cow);
    j["mean_votes_frq"] = r(summary.mean_n_frq);
    return j;
}

}  // namespace ddc
