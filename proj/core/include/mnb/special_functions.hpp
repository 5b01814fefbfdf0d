#pragma once

namespace mnb {

// ln Gamma(x) for x > 0.  Relative error <= 1e-12 over [1e-6, 1e12]
// (argument shifted above 10, then the Stirling series).
double log_gamma(double x);

// psi(x) = d/dx ln Gamma(x) for x > 0; relative error <= 1e-10.
double digamma(double x);

// psi'(x) for x > 0; relative error <= 1e-8.
double trigamma(double x);

// Inverse standard normal CDF on (0,1); |Phi(result) - p| <= 1e-12.
double std_normal_quantile(double p);

// Standard normal CDF (erfc based, used for p-values and test oracles).
double std_normal_cdf(double x);

}  // namespace mnb
