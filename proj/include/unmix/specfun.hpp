#pragma once

namespace unmix {

// Logarithmic derivative of the gamma function.
double digamma(double x);

// Regularized lower incomplete gamma function P(a, x), i.e. the CDF of
// Gamma(a, 1) at x.
double gamma_cdf_regularized(double a, double x);

// Asymptotic Kolmogorov-Smirnov p-value for statistic d with n samples.
double ks_p_value(double d, int n);

}  // namespace unmix
