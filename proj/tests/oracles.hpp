#pragma once

// Independent reference implementations used only by tests. These were
// written before the library tests and stay frozen: when a test disagrees
// with an oracle, the library is what gets fixed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

// Regularized incomplete beta via tanh-sinh (double-exponential) quadrature
// of the Beta(a, b) density on [0, x]. The substitution clusters nodes at
// both endpoints, so the t^(a-1) and (1-t)^(b-1) singularities for
// parameters down to 0.5 are integrated accurately. Completely independent
// of the continued-fraction evaluation under test.
inline double reg_inc_beta(double x, double a, double b) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    auto integrand = [&](double t) -> double {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        const double lg = (a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) + log_norm;
        return lg < -745.0 ? 0.0 : std::exp(lg);
    };

    // Map u in (-inf, inf) onto t in (0, x):
    //   t(u) = x / (1 + exp(-2z)),  z = (pi/2) sinh(u)
    //   dt/du = x * (pi/2) cosh(u) / (2 cosh^2(z))
    const double half_pi = 1.5707963267948966;
    auto node = [&](double u, double& t, double& w) {
        const double z = half_pi * std::sinh(u);
        if (std::abs(z) > 350.0) {  // cosh^2 overflows; weight is zero anyway
            t = z > 0.0 ? x : 0.0;
            w = 0.0;
            return;
        }
        t = x / (1.0 + std::exp(-2.0 * z));
        const double ch = std::cosh(z);
        w = x * half_pi * std::cosh(u) / (2.0 * ch * ch);
    };

    const double u_max = 4.0;  // |z| > 85 there; far past double underflow
    double h = 1.0;
    double t, w;
    node(0.0, t, w);
    double sum = integrand(t) * w;
    double prev = sum * h;
    for (int k = 1; k * h <= u_max; ++k) {
        node(k * h, t, w);
        sum += integrand(t) * w;
        node(-k * h, t, w);
        sum += integrand(t) * w;
    }
    double value = sum * h;

    for (int level = 1; level <= 14; ++level) {
        h *= 0.5;
        // New nodes sit at odd multiples of the refined step.
        for (int k = 1; k * h <= u_max; k += 2) {
            node(k * h, t, w);
            sum += integrand(t) * w;
            node(-k * h, t, w);
            sum += integrand(t) * w;
        }
        prev = value;
        value = sum * h;
        if (level >= 3 && std::abs(value - prev) <= 1e-14 * std::abs(value) + 1e-305) break;
    }
    return std::min(1.0, std::max(0.0, value));
}

// Eigenvalues of [[a, b], [b, c]] straight from the characteristic
// polynomial lambda^2 - (a+c) lambda + (ac - b^2).
struct EigenRoots {
    double lambda1;
    double lambda2;
};

inline EigenRoots symmetric_eigen_roots(double a, double b, double c) {
    const double tr = a + c;
    const double det = a * c - b * b;
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

// Linear-interpolation quantile computed with index arithmetic kept in
// exact integer/remainder form: position q*(n-1) is split as num/den with
// integer numerator, so dyadic q over integer data stays exact.
inline double quantile_linear(std::vector<double> values, long num, long den) {
    if (values.empty() || den <= 0 || num < 0 || num > den) {
        throw std::invalid_argument("bad quantile oracle input");
    }
    std::sort(values.begin(), values.end());
    const long n = static_cast<long>(values.size());
    const long scaled = num * (n - 1);  // position = scaled / den
    const long lo = scaled / den;
    const long rem = scaled % den;
    if (rem == 0) return values[static_cast<std::size_t>(lo)];
    const double frac = static_cast<double>(rem) / static_cast<double>(den);
    return values[static_cast<std::size_t>(lo)] +
           frac * (values[static_cast<std::size_t>(lo + 1)] - values[static_cast<std::size_t>(lo)]);
}

inline double tukey_upper_fence(const std::vector<double>& values) {
    const double q1 = quantile_linear(values, 1, 4);
    const double q3 = quantile_linear(values, 3, 4);
    return q3 + 1.5 * (q3 - q1);
}

// Plain mean over an explicit slice; re-derives window means from scratch.
inline double mean(const std::vector<double>& values, std::size_t begin, std::size_t end) {
    if (end <= begin || end > values.size()) throw std::invalid_argument("bad mean slice");
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += values[i];
    return s / static_cast<double>(end - begin);
}

// Sliding-window minimum of from-scratch window means; the path-confidence
// reference.
inline double min_window_mean(const std::vector<double>& values, std::size_t window) {
    if (values.size() < window || window == 0) {
        throw std::invalid_argument("window larger than data");
    }
    double best = mean(values, 0, window);
    for (std::size_t start = 1; start + window <= values.size(); ++start) {
        best = std::min(best, mean(values, start, start + window));
    }
    return best;
}

}  // namespace oracle
