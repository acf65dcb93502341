#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/phase_space.hpp"
#include "ddc/quantiles.hpp"

namespace ddc {

// Outcome of one gate evaluation, ordered by tier priority.
enum class GateVerdict {
    proceed,                // no tier fired, keep decoding
    fast_pass,              // tier 1: strong local confidence, exempt from later checks
    prune_low_confidence,   // tier 2: global confidence dropped below the floor
    prune_instability,      // tier 3: phase-space score above the outlier fence
};

inline const char* to_string(GateVerdict v) {
    switch (v) {
        case GateVerdict::proceed: return "proceed";
        case GateVerdict::fast_pass: return "fast_pass";
        case GateVerdict::prune_low_confidence: return "low_confidence";
        case GateVerdict::prune_instability: return "instability";
    }
    return "proceed";
}

inline bool is_prune(GateVerdict v) {
    return v == GateVerdict::prune_low_confidence || v == GateVerdict::prune_instability;
}

struct GateThresholds {
    double tau_pass = std::numeric_limits<double>::infinity();
    double tau_drop = -std::numeric_limits<double>::infinity();
    double tau_risk = std::numeric_limits<double>::infinity();
};

// Calibrates the three thresholds from the initial population: tau_pass is a
// high percentile of local window means, tau_drop a low percentile of global
// window means, tau_risk the upper Tukey fence of instability scores. A risk
// pool too small for quartiles (every calibration window degenerate, or paths
// shorter than the trend window) disables tier 3 rather than failing the run.
inline GateThresholds calibrate_gate(const std::vector<double>& local_pool,
                                     const std::vector<double>& global_pool,
                                     const std::vector<double>& risk_pool,
                                     double pass_percentile = 90.0,
                                     double drop_percentile = 20.0,
                                     double tukey_multiplier = 1.5) {
    if (local_pool.empty() || global_pool.empty()) {
        throw InsufficientCalibrationError("gate calibration needs nonempty confidence pools");
    }
    if (!(pass_percentile > 0.0 && pass_percentile < 100.0) ||
        !(drop_percentile > 0.0 && drop_percentile < 100.0)) {
        throw ConfigError("gate percentiles must be in (0, 100)");
    }
    GateThresholds t;
    t.tau_pass = quantile(local_pool, pass_percentile / 100.0);
    t.tau_drop = quantile(global_pool, drop_percentile / 100.0);
    t.tau_risk = risk_pool.size() < 4 ? std::numeric_limits<double>::infinity()
                                      : tukey_upper_fence(risk_pool, tukey_multiplier);
    return t;
}

// Tiered check for one completed window. Tiers are strictly ordered: a fast
// pass shields the path from the confidence floor and the instability fence,
// and a low-confidence prune takes precedence over an instability prune.
// Degenerate phase geometry never prunes.
inline GateVerdict evaluate_gate(double local_mean, double global_mean,
                                 const PhaseProfile& phase, const GateThresholds& t) {
    if (!std::isfinite(local_mean) || !std::isfinite(global_mean)) {
        throw DomainError("gate inputs must be finite");
    }
    if (local_mean > t.tau_pass) return GateVerdict::fast_pass;
    if (global_mean < t.tau_drop) return GateVerdict::prune_low_confidence;
    if (!phase.degenerate && phase.score > t.tau_risk) return GateVerdict::prune_instability;
    return GateVerdict::proceed;
}

// One-shot form: evaluates the tiers against a raw trend window, building the
// phase profile only when tiers 1 and 2 leave the decision open.
inline GateVerdict stratified_decision(double local_mean, double global_mean,
                                       const std::vector<double>& trend_window,
                                       std::optional<double> prev_conf,
                                       const GateThresholds& t, double eta) {
    if (!std::isfinite(local_mean) || !std::isfinite(global_mean)) {
        throw DomainError("gate inputs must be finite");
    }
    if (local_mean > t.tau_pass) return GateVerdict::fast_pass;
    if (global_mean < t.tau_drop) return GateVerdict::prune_low_confidence;
    const PhaseProfile phase = phase_profile(trend_window, prev_conf, eta);
    if (!phase.degenerate && phase.score > t.tau_risk) return GateVerdict::prune_instability;
    return GateVerdict::proceed;
}

}  // namespace ddc
