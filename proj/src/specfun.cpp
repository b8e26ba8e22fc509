#include "unmix/specfun.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix {

double digamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("digamma: x must be positive");
    double result = 0.0;
    // Shift up until the asymptotic series is accurate.
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    double inv = 1.0 / x;
    double inv2 = inv * inv;
    // Asymptotic expansion with Bernoulli-number coefficients.
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 -
                      inv2 * (1.0 / 120.0 -
                              inv2 * (1.0 / 252.0 -
                                      inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    return result;
}

namespace {

// Series representation, converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), accurate for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_cdf_regularized(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("gamma_cdf: a must be positive");
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

double ks_p_value(double d, int n) {
    double lambda = (std::sqrt(static_cast<double>(n)) + 0.12 +
                     0.11 / std::sqrt(static_cast<double>(n))) *
                    d;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-12) break;
    }
    double p = 2.0 * sum;
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

}  // namespace unmix
