#include "mnb/special_functions.hpp"

#include <cmath>

#include "mnb/errors.hpp"

namespace mnb {

namespace {

constexpr double kHalfLog2Pi = 0.918938533204672741780329736406;

// Stirling tail sum_{n} B_{2n} / (2n (2n-1) x^{2n-1}), valid for x >= 10.
double stirling_tail(double x) {
  const double r = 1.0 / (x * x);
  double s = -3617.0 / 122400.0;
  s = s * r + 1.0 / 156.0;
  s = s * r - 691.0 / 360360.0;
  s = s * r + 1.0 / 1188.0;
  s = s * r - 1.0 / 1680.0;
  s = s * r + 1.0 / 1260.0;
  s = s * r - 1.0 / 360.0;
  s = s * r + 1.0 / 12.0;
  return s / x;
}

void check_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError(std::string(fn) + ": argument must be positive and finite");
}

}  // namespace

double log_gamma(double x) {
  check_positive(x, "log_gamma");
  double shift = 0.0;
  double z = x;
  while (z < 10.0) {
    shift += std::log(z);
    z += 1.0;
  }
  const double core = (z - 0.5) * std::log(z) - z + kHalfLog2Pi + stirling_tail(z);
  return core - shift;
}

double digamma(double x) {
  check_positive(x, "digamma");
  double shift = 0.0;
  double z = x;
  while (z < 10.0) {
    shift += 1.0 / z;
    z += 1.0;
  }
  const double r = 1.0 / (z * z);
  // psi(z) ~ ln z - 1/(2z) - sum B_{2n} / (2n z^{2n})
  double s = -1.0 / 12.0;
  s = s * r + 691.0 / 32760.0;
  s = s * r - 1.0 / 132.0;
  s = s * r + 1.0 / 240.0;
  s = s * r - 1.0 / 252.0;
  s = s * r + 1.0 / 120.0;
  s = s * r - 1.0 / 12.0;
  return std::log(z) - 0.5 / z + s * r - shift;
}

double trigamma(double x) {
  check_positive(x, "trigamma");
  double shift = 0.0;
  double z = x;
  while (z < 10.0) {
    shift += 1.0 / (z * z);
    z += 1.0;
  }
  const double r = 1.0 / (z * z);
  // psi'(z) ~ 1/z + 1/(2z^2) + sum B_{2n} / z^{2n+1}
  double s = 7.0 / 6.0;
  s = s * r - 691.0 / 2730.0;
  s = s * r + 5.0 / 66.0;
  s = s * r - 1.0 / 30.0;
  s = s * r + 1.0 / 42.0;
  s = s * r - 1.0 / 30.0;
  s = s * r + 1.0 / 6.0;
  return 1.0 / z + 0.5 * r + s * r / z + shift;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Wichura's PPND16 (algorithm AS 241), accurate to ~1e-16 in the argument.
double std_normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw DomainError("std_normal_quantile: p must lie strictly inside (0,1)");

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }

  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return (q < 0.0) ? -val : val;
}

}  // namespace mnb
