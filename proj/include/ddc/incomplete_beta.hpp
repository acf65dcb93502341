#pragma once

#include <cmath>
#include <string>

#include "ddc/errors.hpp"

namespace ddc {

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
// Converges for x < (a+1)/(a+b+2); callers arrange that via the symmetry
// transform. Throws NumericError if the iteration cap is reached.
inline double beta_cont_fraction(double x, double a, double b, int max_iter, double rel_tol) {
    const double tiny = 1e-300;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < rel_tol) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge (a=" +
                       std::to_string(a) + ", b=" + std::to_string(b) + ", x=" +
                       std::to_string(x) + ")");
}

inline double reg_inc_beta_direct(double x, double a, double b, int max_iter, double rel_tol) {
    // Prefactor x^a (1-x)^b / (a B(a,b)), evaluated in log space.
    double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
    return std::exp(log_front) * beta_cont_fraction(x, a, b, max_iter, rel_tol) / a;
}

}  // namespace detail

// Regularized incomplete beta function I_x(a, b): the CDF of Beta(a, b)
// evaluated at x. The symmetry I_x(a,b) = 1 - I_{1-x}(b,a) is applied when
// x > a/(a+b) so the continued fraction always runs in its convergent
// region. Iteration cap and relative tolerance are fixed at 300 / 1e-12.
inline double reg_inc_beta(double x, double a, double b, int max_iter = 300,
                           double rel_tol = 1e-12) {
    if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0) ||
        !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("reg_inc_beta domain violation (x=" + std::to_string(x) +
                          ", a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    if (x > a / (a + b)) {
        return 1.0 - detail::reg_inc_beta_direct(1.0 - x, b, a, max_iter, rel_tol);
    }
    return detail::reg_inc_beta_direct(x, a, b, max_iter, rel_tol);
}

}  // namespace ddc
