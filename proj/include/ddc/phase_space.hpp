#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ddc/errors.hpp"

namespace ddc {

inline constexpr double kPhaseStdEpsilon = 1e-9;
inline constexpr double kPhaseEigenEpsilon = 1e-12;

struct EigenPair {
    double lambda1 = 0.0;  // dominant eigenvalue, lambda1 >= lambda2
    double lambda2 = 0.0;
    double v1_x = 1.0;  // unit eigenvector of lambda1, first nonzero component positive
    double v1_y = 0.0;
};

// Closed-form eigen decomposition of the symmetric 2x2 matrix [[a, b], [b, c]].
inline EigenPair symmetric_eigen_2x2(double a, double b, double c) {
    EigenPair out;
    const double half_trace = 0.5 * (a + c);
    const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    out.lambda1 = half_trace + disc;
    out.lambda2 = half_trace - disc;
    if (b != 0.0) {
        out.v1_x = b;
        out.v1_y = out.lambda1 - a;
    } else {
        // Diagonal matrix: eigenvectors are the axes.
        out.v1_x = a >= c ? 1.0 : 0.0;
        out.v1_y = a >= c ? 0.0 : 1.0;
    }
    const double norm = std::hypot(out.v1_x, out.v1_y);
    if (norm > 0.0) {
        out.v1_x /= norm;
        out.v1_y /= norm;
    }
    // Sign convention: first nonzero component positive.
    if (out.v1_x < 0.0 || (out.v1_x == 0.0 && out.v1_y < 0.0)) {
        out.v1_x = -out.v1_x;
        out.v1_y = -out.v1_y;
    }
    return out;
}

// Standardized (position, velocity) rows over one confidence window. Both
// columns are scaled by the population standard deviation of the window;
// position is centered on the window mean, velocity is left as raw scaled
// differences. The first row's velocity uses the last value of the previous
// window when available, otherwise 0.
inline std::vector<std::array<double, 2>> phase_matrix(const std::vector<double>& window,
                                                       std::optional<double> prev_value,
                                                       double* sigma_out = nullptr) {
    if (window.size() < 2) throw InsufficientWindowError("phase matrix needs >= 2 values");
    double mean = 0.0;
    for (double v : window) {
        if (!std::isfinite(v)) throw DomainError("phase matrix input must be finite");
        mean += v;
    }
    mean /= static_cast<double>(window.size());
    double var = 0.0;
    for (double v : window) var += (v - mean) * (v - mean);
    var /= static_cast<double>(window.size());
    const double sigma = std::sqrt(var);
    if (sigma_out) *sigma_out = sigma;
    if (sigma < kPhaseStdEpsilon) return {};  // flat window, caller treats as degenerate

    std::vector<std::array<double, 2>> rows(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        rows[i][0] = (window[i] - mean) / sigma;
        if (i > 0) {
            rows[i][1] = (window[i] - window[i - 1]) / sigma;
        } else if (prev_value) {
            rows[i][1] = (window[0] - *prev_value) / sigma;
        } else {
            rows[i][1] = 0.0;
        }
    }
    return rows;
}

struct PhaseProfile {
    bool degenerate = true;  // flat or rank-deficient window: never prune on this
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double v1_x = 0.0;
    double v1_y = 0.0;
    double alignment = 0.0;
    double score = 0.0;
};

// Instability score from second moments of the phase rows:
//   R = (1 - (l1 - l2)/(l1 + l2)) + eta * align^2 * [align < 0]
// where align couples the dominant direction's position loading with the
// sign of the mean velocity (sign(0) = +1).
inline double instability_score(double lambda1, double lambda2, double alignment, double eta) {
    const double sum = lambda1 + lambda2;
    double score = 1.0 - (lambda1 - lambda2) / sum;
    if (alignment < 0.0) score += eta * alignment * alignment;
    return score;
}

// Full pipeline for one window: rows, scatter matrix Z^T Z / (k - 1),
// eigen structure, alignment, and score. Degenerate geometry (flat window
// or vanishing eigenvalue mass) is reported instead of scored.
inline PhaseProfile phase_profile(const std::vector<double>& window,
                                  std::optional<double> prev_value, double eta) {
    if (!std::isfinite(eta) || eta < 0.0) throw ConfigError("eta must be finite and >= 0");
    PhaseProfile profile;
    const auto rows = phase_matrix(window, prev_value);
    if (rows.empty()) return profile;

    double a = 0.0, b = 0.0, c = 0.0, vel_mean = 0.0;
    for (const auto& r : rows) {
        a += r[0] * r[0];
        b += r[0] * r[1];
        c += r[1] * r[1];
        vel_mean += r[1];
    }
    const double denom = static_cast<double>(rows.size() - 1);
    a /= denom;
    b /= denom;
    c /= denom;
    vel_mean /= static_cast<double>(rows.size());

    const EigenPair eig = symmetric_eigen_2x2(a, b, c);
    if (!(eig.lambda1 + eig.lambda2 > kPhaseEigenEpsilon)) return profile;

    profile.degenerate = false;
    profile.lambda1 = eig.lambda1;
    profile.lambda2 = eig.lambda2;
    profile.v1_x = eig.v1_x;
    profile.v1_y = eig.v1_y;
    const double vel_sign = vel_mean < 0.0 ? -1.0 : 1.0;
    profile.alignment = std::abs(eig.v1_x) * vel_sign;
    profile.score = instability_score(eig.lambda1, eig.lambda2, profile.alignment, eta);
    return profile;
}

}  // namespace ddc
