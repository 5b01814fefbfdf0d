#include "mnb/residuals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mnb/parallel.hpp"
#include "mnb/rng.hpp"
#include "mnb/simulation.hpp"
#include "mnb/special_functions.hpp"

namespace mnb {

namespace {

constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0 - 1e-12;

double tail_draw(double a, double b, RngStream& stream) {
  const double v = stream.uniform_open01();  // (0,1], so u lands in (a, b]
  double u = a + (b - a) * v;
  return std_normal_quantile(std::clamp(u, kClampLo, kClampHi));
}

Vector quantile_residual_values(const ThetaParams& theta, const LongitudinalDataset& data,
                                std::uint64_t seed, std::uint64_t stream_salt) {
  Vector r(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Cluster& c = data.clusters()[i];
    const Vector mu = linear_predictor(theta, c);
    const double mu_plus = std::accumulate(mu.begin(), mu.end(), 0.0);
    const long long y_plus = c.y_total();
    const double a = (y_plus == 0) ? 0.0 : nb_total_cdf(y_plus - 1, mu_plus, theta.phi);
    const double b = nb_total_cdf(y_plus, mu_plus, theta.phi);
    RngStream stream = RngStream::derive(seed, stream_salt, i);
    r[i] = tail_draw(a, b, stream);
  }
  return r;
}

// type-7 empirical quantile of a sorted sample
double quantile_sorted(const Vector& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double w = h - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

EnvelopeBand band_from_replicates(const Vector& observed_raw,
                                  const std::vector<Vector>& replicate_sorted, int nsim,
                                  double band, std::uint64_t seed) {
  const std::size_t len = observed_raw.size();
  EnvelopeBand out;
  out.nsim = nsim;
  out.seed = seed;
  out.sorted_index.resize(len);
  std::iota(out.sorted_index.begin(), out.sorted_index.end(), std::size_t{0});
  std::sort(out.sorted_index.begin(), out.sorted_index.end(),
            [&](std::size_t a, std::size_t b) { return observed_raw[a] < observed_raw[b]; });
  out.observed.resize(len);
  for (std::size_t k = 0; k < len; ++k) out.observed[k] = observed_raw[out.sorted_index[k]];

  out.lower.resize(len);
  out.median.resize(len);
  out.upper.resize(len);
  const double p_lo = (1.0 - band) / 2.0;
  const double p_hi = 1.0 - p_lo;
  Vector column(nsim);
  for (std::size_t k = 0; k < len; ++k) {
    for (int r = 0; r < nsim; ++r) column[r] = replicate_sorted[r][k];
    std::sort(column.begin(), column.end());
    out.lower[k] = quantile_sorted(column, p_lo);
    out.median[k] = quantile_sorted(column, 0.5);
    out.upper[k] = quantile_sorted(column, p_hi);
  }
  return out;
}

void check_envelope_args(int nsim, double band) {
  if (nsim < 19) throw DomainError("simulated_envelope: nsim must be >= 19");
  if (!(band > 0.0) || band > 1.0)
    throw DomainError("simulated_envelope: band must lie in (0,1]");
}

}  // namespace

double nb_total_cdf(long long y_plus, double mu_plus, double phi) {
  if (y_plus < 0) throw DomainError("nb_total_cdf: y_plus must be >= 0");
  if (!(mu_plus > 0.0) || !std::isfinite(mu_plus))
    throw DomainError("nb_total_cdf: mu_plus must be positive");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("nb_total_cdf: phi must be positive");

  // q = phi/(phi+mu+), pmf(0) = q^phi, pmf(t+1) = pmf(t) (t+phi)/(t+1) (1-q)
  const double log_q = -std::log1p(mu_plus / phi);
  const double log_1mq = std::log(mu_plus) - std::log(phi + mu_plus);
  double log_pmf = phi * log_q;

  double sum = 0.0, comp = 0.0;  // Kahan compensation keeps the error below 1e-12
  for (long long t = 0;; ++t) {
    const double term = std::exp(log_pmf);
    const double yv = term - comp;
    const double tv = sum + yv;
    comp = (tv - sum) - yv;
    sum = tv;
    if (t == y_plus) break;
    log_pmf += std::log((static_cast<double>(t) + phi) / (static_cast<double>(t) + 1.0)) +
               log_1mq;
  }
  return std::min(sum, 1.0);
}

ResidualReport quantile_residuals(const FitResult& fit, const LongitudinalDataset& data,
                                  std::uint64_t seed) {
  if (!fit.converged)
    throw DomainError("quantile_residuals: fit did not converge");
  ResidualReport out;
  out.kind = ResidualKind::quantile_mnb;
  out.seed = seed;
  out.residuals = quantile_residual_values(fit.theta_hat, data, seed, 0);
  for (const Cluster& c : data.clusters()) out.labels.push_back(c.id);
  return out;
}

ResidualReport pearson_residuals(const PoissonFit& baseline, const LongitudinalDataset& data) {
  if (baseline.fitted_means.size() != data.n())
    throw DomainError("pearson_residuals: baseline does not match dataset");
  ResidualReport out;
  out.kind = ResidualKind::pearson_poisson;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Cluster& c = data.clusters()[i];
    const Vector& mu = baseline.fitted_means[i];
    for (std::size_t j = 0; j < c.m(); ++j) {
      out.labels.push_back(c.id + ":" + std::to_string(j + 1));
      out.residuals.push_back((static_cast<double>(c.y[j]) - mu[j]) / std::sqrt(mu[j]));
    }
  }
  return out;
}

EnvelopeBand simulated_envelope(const FitResult& fit, const LongitudinalDataset& data,
                                int nsim, double band, std::uint64_t seed, int threads) {
  check_envelope_args(nsim, band);
  if (!fit.converged) throw DomainError("simulated_envelope: fit did not converge");

  // replicate stream salt r=0 is the observed data's u-draw
  Vector observed = quantile_residual_values(fit.theta_hat, data, seed, 0);

  std::vector<Vector> replicate_sorted(nsim);
  parallel_for(nsim, threads, [&](std::size_t ri) {
    const std::uint64_t r = static_cast<std::uint64_t>(ri) + 1;
    std::vector<Cluster> sim_clusters = data.clusters();
    for (std::size_t i = 0; i < sim_clusters.size(); ++i) {
      const Vector mu = linear_predictor(fit.theta_hat, sim_clusters[i]);
      RngStream stream = RngStream::derive(seed, r, i);
      sim_clusters[i].y = gen_mnb_cluster(mu, fit.theta_hat.phi, stream);
    }
    LongitudinalDataset sim(sim_clusters, data.covariate_names());

    ThetaParams theta_r = fit.theta_hat;
    try {
      FitOptions o;
      o.init = fit.theta_hat;
      const FitResult refit = mnb::fit(sim, o);
      if (refit.converged) theta_r = refit.theta_hat;
    } catch (const Error&) {
      // fall back to the generating estimate for this replicate
    }
    Vector r_res = quantile_residual_values(theta_r, sim, seed ^ 0x5e5ULL, r);
    std::sort(r_res.begin(), r_res.end());
    replicate_sorted[ri] = std::move(r_res);
  });

  return band_from_replicates(observed, replicate_sorted, nsim, band, seed);
}

EnvelopeBand simulated_envelope(const PoissonFit& baseline, const LongitudinalDataset& data,
                                int nsim, double band, std::uint64_t seed, int threads) {
  check_envelope_args(nsim, band);
  const Vector observed = pearson_residuals(baseline, data).residuals;

  std::vector<Vector> replicate_sorted(nsim);
  parallel_for(nsim, threads, [&](std::size_t ri) {
    const std::uint64_t r = static_cast<std::uint64_t>(ri) + 1;
    std::vector<Cluster> sim_clusters = data.clusters();
    for (std::size_t i = 0; i < sim_clusters.size(); ++i) {
      RngStream stream = RngStream::derive(seed, r, i);
      const Vector& mu = baseline.fitted_means[i];
      for (std::size_t j = 0; j < sim_clusters[i].m(); ++j)
        sim_clusters[i].y[j] = stream.poisson(mu[j]);
    }
    LongitudinalDataset sim(sim_clusters, data.covariate_names());

    Vector r_res;
    try {
      const PoissonFit refit = poisson_fit(sim);
      r_res = pearson_residuals(refit, sim).residuals;
    } catch (const Error&) {
      PoissonFit fallback = baseline;
      r_res = pearson_residuals(fallback, sim).residuals;
    }
    std::sort(r_res.begin(), r_res.end());
    replicate_sorted[ri] = std::move(r_res);
  });

  return band_from_replicates(observed, replicate_sorted, nsim, band, seed);
}

}  // namespace mnb
