#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mnb/estimation.hpp"

namespace mnb {

enum class ResidualKind { quantile_mnb, pearson_poisson };

struct ResidualReport {
  std::vector<std::string> labels;  // cluster ids, or "id:j" per measurement
  Vector residuals;
  ResidualKind kind = ResidualKind::quantile_mnb;
  std::uint64_t seed = 0;
};

struct EnvelopeBand {
  std::vector<std::size_t> sorted_index;  // original index of each order statistic
  Vector lower, median, upper, observed;
  int nsim = 0;
  std::uint64_t seed = 0;
};

// CDF of the cluster total y+ ~ NB with q = phi/(phi + mu+), by log-space
// recursion over the support.
double nb_total_cdf(long long y_plus, double mu_plus, double phi);

// Randomized quantile residuals, one per cluster: u uniform on
// (F(y+ - 1), F(y+)], residual = Phi^-1(u); u clamped into [1e-12, 1-1e-12].
ResidualReport quantile_residuals(const FitResult& fit, const LongitudinalDataset& data,
                                  std::uint64_t seed);

// (y_ij - mu_ij) / sqrt(mu_ij) per measurement for the Poisson baseline.
ResidualReport pearson_residuals(const PoissonFit& baseline, const LongitudinalDataset& data);

// Simulated envelope for the MNB quantile residuals: nsim replicate datasets
// from the fitted model, each refit (warm-started), pointwise quantiles of the
// sorted residuals.  band = 0.95 keeps the central 95%; band = 1 reproduces
// the min/max envelope of the original package.
EnvelopeBand simulated_envelope(const FitResult& fit, const LongitudinalDataset& data,
                                int nsim, double band, std::uint64_t seed, int threads = 1);

// Same machinery for the Poisson baseline's Pearson residuals.
EnvelopeBand simulated_envelope(const PoissonFit& baseline, const LongitudinalDataset& data,
                                int nsim, double band, std::uint64_t seed, int threads = 1);

}  // namespace mnb
