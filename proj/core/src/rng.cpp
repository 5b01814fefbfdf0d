#include "mnb/rng.hpp"

#include <cmath>

#include "mnb/errors.hpp"
#include "mnb/special_functions.hpp"

namespace mnb {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RngStream RngStream::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (a + 0x517cc1b727220a95ULL));
  h = splitmix64(h ^ (b + 0x2545f4914f6cdd1dULL));
  return RngStream(h);
}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open01() { return 1.0 - uniform01(); }

double RngStream::normal() {
  // (k + 0.5) * 2^-53 is strictly inside (0,1) for k in [0, 2^53)
  const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  return std_normal_quantile(u);
}

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw DomainError("RngStream::gamma: shape and rate must be positive");

  if (shape < 1.0) {
    const double u = uniform_open01();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }

  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

long long RngStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw DomainError("RngStream::poisson: mean must be finite and nonnegative");
  if (mean == 0.0) return 0;

  if (mean < 30.0) {
    // multiplication method
    const double limit = std::exp(-mean);
    long long k = 0;
    double prod = uniform01();
    while (prod > limit) {
      ++k;
      prod *= uniform01();
    }
    return k;
  }

  // PTRS transformed rejection (Hoermann 1993)
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = uniform01() - 0.5;
    const double v = uniform01();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_mean - mean - log_gamma(k + 1.0))
      return static_cast<long long>(kf);
  }
}

}  // namespace mnb
