#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ddc/errors.hpp"

namespace ddc {

// Quantile with linear interpolation between order statistics: the q-th
// quantile of n sorted values sits at fractional index q * (n - 1).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must be in [0, 1]");
    for (double v : values) {
        if (!std::isfinite(v)) throw DomainError("quantile input must be finite");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

// Upper Tukey fence Q3 + multiplier * IQR, the outlier cut for instability
// scores. Needs at least 4 samples for the quartiles to be meaningful.
inline double tukey_upper_fence(const std::vector<double>& values, double multiplier = 1.5) {
    if (values.size() < 4) {
        throw InsufficientCalibrationError("tukey fence needs >= 4 values, got " +
                                           std::to_string(values.size()));
    }
    if (!std::isfinite(multiplier) || multiplier < 0.0) {
        throw ConfigError("tukey multiplier must be finite and >= 0");
    }
    const double q1 = quantile(values, 0.25);
    const double q3 = quantile(values, 0.75);
    return q3 + multiplier * (q3 - q1);
}

}  // namespace ddc
