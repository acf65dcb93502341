#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ddc/answer_extract.hpp"
#include "ddc/confidence.hpp"
#include "ddc/config.hpp"
#include "ddc/errors.hpp"
#include "ddc/evidence.hpp"
#include "ddc/path_source.hpp"
#include "ddc/phase_space.hpp"
#include "ddc/pruning.hpp"

namespace ddc {

enum class PathStatus { active, completed, pruned, budget_exhausted, failed };

inline const char* to_string(PathStatus s) {
    switch (s) {
        case PathStatus::active: return "active";
        case PathStatus::completed: return "completed";
        case PathStatus::pruned: return "pruned";
        case PathStatus::budget_exhausted: return "budget_exhausted";
        case PathStatus::failed: return "failed";
    }
    return "active";
}

struct PathRecord {
    std::size_t id = 0;
    bool init_phase = false;
    PathStatus status = PathStatus::active;
    std::string answer;
    bool has_answer = false;
    double path_confidence = 0.0;  // raw min-window global confidence
    double vote_weight = 0.0;      // normalized weight added to the ledger
    bool voted = false;
    std::size_t tokens = 0;
    std::string detail;  // prune reason or failure message
};

// Maps raw path confidences onto vote weights: min-max over the init
// population, clamped to [0.05, 1.0]. A spread-free init population makes
// every weight 1.0.
struct WeightNormalizer {
    double lo = 0.0;
    double hi = 1.0;
    bool degenerate = true;

    static WeightNormalizer fit(const std::vector<double>& init_confidences) {
        WeightNormalizer n;
        if (init_confidences.empty()) return n;
        auto [mn, mx] = std::minmax_element(init_confidences.begin(), init_confidences.end());
        n.lo = *mn;
        n.hi = *mx;
        n.degenerate = !(*mx > *mn);
        return n;
    }

    double operator()(double confidence) const {
        if (degenerate) return 1.0;
        const double w = (confidence - lo) / (hi - lo);
        return std::clamp(w, 0.05, 1.0);
    }
};

using AnswerExtractor = std::function<std::optional<std::string>(const std::string&)>;

// Calibration samples pooled over init-phase windows.
struct WindowPools {
    std::vector<double> local_means;
    std::vector<double> global_means;
    std::vector<double> risk_scores;
};

// Streams one path to a terminal status. With a gate, the stratified tiers
// fire every stride tokens once the window fills, until a fast pass exempts
// the path for good. With pools, every evaluated window contributes
// calibration samples. Init runs pools without a gate; the main loop runs
// the gate without pools.
inline PathRecord walk_path(PathStream& stream, std::size_t id, bool init_phase,
                            const EngineConfig& cfg, const AnswerExtractor& extract,
                            const GateThresholds* gate, WindowPools* pools) {
    PathRecord rec;
    rec.id = id;
    rec.init_phase = init_phase;
    PathConfidenceTracker tracker(cfg.window_len);
    bool fast_passed = false;
    while (true) {
        std::optional<TokenEvent> event;
        try {
            event = stream.next();
        } catch (const TransportError& e) {
            stream.cancel();
            rec.status = PathStatus::failed;
            rec.detail = e.what();
            break;
        }
        if (!event) {
            rec.status = PathStatus::completed;
            if (extract) {
                if (auto answer = extract(stream.final_text())) {
                    rec.answer = *answer;
                    rec.has_answer = true;
                }
            }
            break;
        }
        try {
            tracker.observe(*event);
        } catch (const MalformedEventError& e) {
            stream.cancel();
            rec.status = PathStatus::failed;
            rec.detail = e.what();
            break;
        }
        ++rec.tokens;
        const bool at_stride =
            tracker.window_full() && (rec.tokens - cfg.window_len) % cfg.stride == 0;
        if (at_stride) {
            const double local_mean = *tracker.local_group_mean();
            const double global_mean = *tracker.global_group_mean();
            if (pools) {
                pools->local_means.push_back(local_mean);
                pools->global_means.push_back(global_mean);
                const PhaseProfile profile = phase_profile(tracker.global_window_values(),
                                                           tracker.global_before_window(),
                                                           cfg.eta);
                if (!profile.degenerate) pools->risk_scores.push_back(profile.score);
            }
            if (gate && !fast_passed) {
                const GateVerdict verdict = stratified_decision(
                    local_mean, global_mean, tracker.global_window_values(),
                    tracker.global_before_window(), *gate, cfg.eta);
                if (verdict == GateVerdict::fast_pass) {
                    fast_passed = true;
                } else if (is_prune(verdict)) {
                    stream.cancel();
                    rec.status = PathStatus::pruned;
                    rec.detail = to_string(verdict);
                    break;
                }
            }
        }
        if (rec.tokens >= cfg.max_tokens_per_path) {
            stream.cancel();
            rec.status = PathStatus::budget_exhausted;
            rec.detail = "token cap";
            break;
        }
    }
    if (rec.tokens > 0) rec.path_confidence = tracker.path_confidence();
    return rec;
}

namespace detail {
// Rounds to 12 significant digits so serialized reports are byte-identical
// across libm implementations.
inline double round_for_report(double v) {
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}
}  // namespace detail

struct RunReport {
    std::string final_answer;  // empty when no path produced a vote
    std::string stop_cause;    // bayesian_early_stop | budget_exhausted |
                               // source_exhausted | source_failure
    double stop_posterior = 0.5;
    std::size_t paths_attempted = 0;
    std::size_t paths_completed = 0;
    std::map<std::string, std::size_t> pruned_by_reason;
    std::size_t tokens_total = 0;
    GateThresholds thresholds;
    std::vector<PathRecord> paths;

    nlohmann::ordered_json to_json() const {
        using detail::round_for_report;
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["final_answer"] = final_answer;
        j["stop_cause"] = stop_cause;
        j["stop_posterior"] = round_for_report(stop_posterior);
        j["paths_attempted"] = paths_attempted;
        j["paths_completed"] = paths_completed;
        j["pruned_by_reason"] = pruned_by_reason;
        j["tokens_total"] = tokens_total;
        nlohmann::ordered_json th;
        th["tau_pass"] = round_for_report(thresholds.tau_pass);
        th["tau_drop"] = round_for_report(thresholds.tau_drop);
        th["tau_risk"] = round_for_report(thresholds.tau_risk);
        j["thresholds"] = th;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& p : paths) {
            nlohmann::ordered_json pj;
            pj["id"] = p.id;
            pj["phase"] = p.init_phase ? "init" : "adaptive";
            pj["status"] = to_string(p.status);
            pj["answer"] = p.answer;
            pj["has_answer"] = p.has_answer;
            pj["path_confidence"] = round_for_report(p.path_confidence);
            pj["vote_weight"] = round_for_report(p.vote_weight);
            pj["voted"] = p.voted;
            pj["tokens"] = p.tokens;
            pj["detail"] = p.detail;
            arr.push_back(std::move(pj));
        }
        j["paths"] = arr;
        return j;
    }

    std::string to_json_string() const { return to_json().dump(2) + "\n"; }
};

// Consensus over completed answered paths in completion order: argmax of
// summed weights, first-completed answer wins ties.
inline std::string weighted_vote(const std::vector<std::pair<std::string, double>>& votes) {
    if (votes.empty()) throw NoAnswerError("no completed paths with answers");
    EvidenceLedger tally;
    for (const auto& [answer, weight] : votes) tally.add_vote(answer, weight);
    return *tally.leader();
}

// Full adaptive loop: unpruned init phase calibrates thresholds and seeds
// the evidence ledger, then paths stream one at a time under the stratified
// gate with a stop check before each launch.
class Engine {
   public:
    explicit Engine(EngineConfig cfg, AnswerExtractor extractor = {})
        : cfg_(cfg),
          extract_(extractor ? std::move(extractor) : AnswerExtractor(&extract_answer)) {
        cfg_.validate();
    }

    struct InitCalibration {
        GateThresholds thresholds;
        WeightNormalizer normalizer;
        EvidenceLedger ledger;
        std::vector<PathRecord> records;
        std::size_t tokens = 0;
    };

    // Streams exactly B_init complete paths with no pruning, pooling window
    // means and instability scores for threshold calibration. Any source
    // failure here aborts the run.
    InitCalibration init_phase(PathSource& source) const {
        InitCalibration init;
        WindowPools pools;
        std::vector<double> confidences;
        for (std::size_t i = 0; i < cfg_.init_budget; ++i) {
            auto stream = source.start_path();
            if (!stream) {
                throw InsufficientCalibrationError("source ran dry during init phase");
            }
            PathRecord rec = walk_path(*stream, i, true, cfg_, extract_, nullptr, &pools);
            if (rec.status == PathStatus::failed) {
                throw TransportError("source failed during init phase: " + rec.detail);
            }
            init.tokens += rec.tokens;
            if (rec.tokens > 0) confidences.push_back(rec.path_confidence);
            init.records.push_back(std::move(rec));
        }
        init.thresholds =
            calibrate_gate(pools.local_means, pools.global_means, pools.risk_scores,
                           cfg_.pass_percentile, cfg_.drop_percentile, cfg_.tukey_multiplier);
        init.normalizer = WeightNormalizer::fit(confidences);
        for (auto& rec : init.records) {
            if (rec.status == PathStatus::completed && rec.has_answer && rec.tokens > 0) {
                rec.vote_weight = init.normalizer(rec.path_confidence);
                rec.voted = true;
                init.ledger.add_vote(rec.answer, rec.vote_weight);
            }
        }
        return init;
    }

    RunReport run(PathSource& source) const {
        RunReport report;
        InitCalibration init = init_phase(source);
        report.thresholds = init.thresholds;
        report.tokens_total = init.tokens;
        report.paths = std::move(init.records);
        report.paths_attempted = cfg_.init_budget;

        EvidenceLedger ledger = std::move(init.ledger);
        const StopPolicy policy{cfg_.gamma, cfg_.tau_stop};

        // Stop check runs immediately after init and again before every
        // launch; budget counts attempted paths, pruned ones included.
        while (true) {
            const StopDecision decision = should_stop(ledger, policy);
            report.stop_posterior = decision.posterior;
            if (decision.stop) {
                report.stop_cause = "bayesian_early_stop";
                break;
            }
            if (report.paths_attempted >= cfg_.budget) {
                report.stop_cause = "budget_exhausted";
                break;
            }
            std::unique_ptr<PathStream> stream;
            try {
                stream = source.start_path();
            } catch (const TransportError&) {
                report.stop_cause = "source_failure";
                break;
            }
            if (!stream) {
                report.stop_cause = "source_exhausted";
                break;
            }
            PathRecord rec = walk_path(*stream, report.paths.size(), false, cfg_, extract_,
                                       &init.thresholds, nullptr);
            ++report.paths_attempted;
            report.tokens_total += rec.tokens;
            if (rec.status == PathStatus::completed && rec.has_answer && rec.tokens > 0) {
                rec.vote_weight = init.normalizer(rec.path_confidence);
                rec.voted = true;
                ledger.add_vote(rec.answer, rec.vote_weight);
            }
            report.paths.push_back(std::move(rec));
        }

        std::vector<std::pair<std::string, double>> votes;
        for (const auto& rec : report.paths) {
            if (rec.status == PathStatus::completed) ++report.paths_completed;
            if (rec.status == PathStatus::pruned) ++report.pruned_by_reason[rec.detail];
            if (rec.voted) votes.emplace_back(rec.answer, rec.vote_weight);
        }
        if (!votes.empty()) report.final_answer = weighted_vote(votes);
        return report;
    }

    const EngineConfig& config() const { return cfg_; }

   private:
    EngineConfig cfg_;
    AnswerExtractor extract_;
};

}  // namespace ddc
