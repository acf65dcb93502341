#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "ddc/errors.hpp"

namespace ddc {

// Knobs for one adaptive run. Defaults follow the reference operating point:
// budget 512, init 16, 2048-token windows, absolute-majority stop at 0.95.
struct EngineConfig {
    std::size_t budget = 512;       // max paths attempted (init + adaptive)
    std::size_t init_budget = 16;   // unpruned calibration paths
    std::size_t window_len = 2048;  // sliding window length L, tokens
    double gamma = 0.5;             // majority fraction for the stop rule
    double tau_stop = 0.95;         // posterior mass required to stop
    double eta = 0.5;               // instability penalty coefficient
    std::size_t top_k = 20;         // logprobs requested per token
    double pass_percentile = 90.0;  // tier-1 calibration percentile (local)
    double drop_percentile = 20.0;  // tier-2 calibration percentile (global)
    double tukey_multiplier = 1.5;  // tier-3 fence multiplier
    std::size_t max_tokens_per_path = 8192;
    std::size_t stride = 1;  // gate evaluation cadence in tokens

    void validate() const {
        if (init_budget < 1 || init_budget > budget) {
            throw ConfigError("init budget must satisfy 1 <= B_init <= B");
        }
        if (window_len < 2) throw ConfigError("window length must be >= 2");
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0, 1)");
        if (!(tau_stop > 0.0 && tau_stop < 1.0)) throw ConfigError("tau_stop must be in (0, 1)");
        if (!std::isfinite(eta) || eta < 0.0) throw ConfigError("eta must be finite and >= 0");
        if (top_k < 1) throw ConfigError("top_k must be >= 1");
        if (!(pass_percentile > 0.0 && pass_percentile < 100.0) ||
            !(drop_percentile > 0.0 && drop_percentile < 100.0)) {
            throw ConfigError("percentiles must be in (0, 100)");
        }
        if (!std::isfinite(tukey_multiplier) || tukey_multiplier < 0.0) {
            throw ConfigError("tukey multiplier must be finite and >= 0");
        }
        if (max_tokens_per_path < 1) throw ConfigError("max_tokens_per_path must be >= 1");
        if (stride < 1) throw ConfigError("stride must be >= 1");
    }
};

}  // namespace ddc
