#include "mnb/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "mnb/estimation.hpp"
#include "mnb/parallel.hpp"
#include "mnb/special_functions.hpp"

namespace mnb {

namespace {

void check_mu(const Vector& mu) {
  for (double m : mu)
    if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("generator: mu must be positive");
}

void validate_config(const StudyConfig& c) {
  if (c.replications < 1) throw DomainError("monte_carlo: R must be >= 1");
  if (c.n < 2) throw DomainError("monte_carlo: n must be >= 2");
  if (c.m < 1) throw DomainError("monte_carlo: m must be >= 1");
  if (c.beta_true.empty()) throw DomainError("monte_carlo: beta_true is empty");
  if (c.beta_true.size() != c.covariates.size() + 1)
    throw DomainError("monte_carlo: need one covariate spec per non-intercept coefficient");
  if (!(c.confidence > 0.0) || !(c.confidence < 1.0))
    throw DomainError("monte_carlo: confidence must lie in (0,1)");
  switch (c.generator) {
    case Generator::poisson_glg:
      if (!(c.phi_true > 0.0)) throw DomainError("monte_carlo: phi_true must be positive");
      break;
    case Generator::poisson_normal_iid:
      if (!(c.sigma2 > 0.0)) throw DomainError("monte_carlo: sigma2 must be positive");
      break;
    case Generator::poisson_normal_correlated:
      if (c.m != 3 || c.sigma_offdiag.size() != 3)
        throw DomainError("monte_carlo: correlated design needs m=3 and three covariances");
      if (!(c.sigma_diag > 0.0)) throw DomainError("monte_carlo: sigma_diag must be positive");
      break;
  }
}

}  // namespace

std::vector<long long> gen_mnb_cluster(const Vector& mu, double phi, RngStream& stream) {
  check_mu(mu);
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("gen_mnb_cluster: phi must be positive");
  const double g = stream.gamma(phi, phi);
  std::vector<long long> y(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) y[j] = stream.poisson(mu[j] * g);
  return y;
}

std::vector<long long> gen_poisson_normal_cluster(const Vector& mu, double sigma2,
                                                  RngStream& stream) {
  check_mu(mu);
  if (!(sigma2 > 0.0)) throw DomainError("gen_poisson_normal_cluster: sigma2 must be positive");
  const double b = std::sqrt(sigma2) * stream.normal();
  const double e = std::exp(b);
  std::vector<long long> y(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) y[j] = stream.poisson(mu[j] * e);
  return y;
}

std::vector<long long> gen_poisson_normal_cluster(const Vector& mu, const SymMatrix& sigma,
                                                  RngStream& stream) {
  check_mu(mu);
  if (sigma.dim() != mu.size())
    throw DomainError("gen_poisson_normal_cluster: Sigma dimension mismatch");
  const Cholesky chol(sigma);  // NotPositiveDefinite propagates

  // b = L z with Sigma = L L^T
  const std::size_t m = mu.size();
  Vector z(m);
  for (auto& zi : z) zi = stream.normal();

  std::vector<long long> y(m);
  for (std::size_t j = 0; j < m; ++j) {
    double b = 0.0;
    for (std::size_t k = 0; k <= j; ++k) b += chol.lower(j, k) * z[k];
    y[j] = stream.poisson(mu[j] * std::exp(b));
  }
  return y;
}

LongitudinalDataset gen_study_dataset(const StudyConfig& config, int replication) {
  validate_config(config);
  const std::size_t p = config.beta_true.size();
  const std::size_t m = config.m;

  SymMatrix sigma(config.m >= 1 ? config.m : 1);
  if (config.generator == Generator::poisson_normal_correlated) {
    sigma.set(0, 0, config.sigma_diag);
    sigma.set(1, 1, config.sigma_diag);
    sigma.set(2, 2, config.sigma_diag);
    sigma.set(0, 1, config.sigma_offdiag[0]);
    sigma.set(0, 2, config.sigma_offdiag[1]);
    sigma.set(1, 2, config.sigma_offdiag[2]);
  }

  std::vector<Cluster> clusters;
  clusters.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    RngStream stream =
        RngStream::derive(config.seed, static_cast<std::uint64_t>(replication), i);

    Cluster c;
    c.id = std::to_string(i + 1);
    c.X = Matrix(m, p);
    c.offset.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) c.X(j, 0) = 1.0;
    for (std::size_t k = 1; k < p; ++k) {
      switch (config.covariates[k - 1]) {
        case CovariateSpec::standard_normal:
          for (std::size_t j = 0; j < m; ++j) c.X(j, k) = stream.normal();
          break;
        case CovariateSpec::uniform01:
          for (std::size_t j = 0; j < m; ++j) c.X(j, k) = stream.uniform01();
          break;
        case CovariateSpec::dummy_two_level:
          // balanced cluster-level factor: second half of the sample gets 1
          for (std::size_t j = 0; j < m; ++j)
            c.X(j, k) = (i >= config.n / 2) ? 1.0 : 0.0;
          break;
      }
    }

    Vector mu(m);
    for (std::size_t j = 0; j < m; ++j) {
      double eta = 0.0;
      for (std::size_t k = 0; k < p; ++k) eta += c.X(j, k) * config.beta_true[k];
      mu[j] = std::exp(eta);
    }

    switch (config.generator) {
      case Generator::poisson_glg:
        c.y = gen_mnb_cluster(mu, config.phi_true, stream);
        break;
      case Generator::poisson_normal_iid:
        c.y = gen_poisson_normal_cluster(mu, config.sigma2, stream);
        break;
      case Generator::poisson_normal_correlated:
        c.y = gen_poisson_normal_cluster(mu, sigma, stream);
        break;
    }
    clusters.push_back(std::move(c));
  }

  std::vector<std::string> names;
  names.push_back("intercept");
  for (std::size_t k = 1; k < p; ++k) names.push_back("x" + std::to_string(k));
  return LongitudinalDataset(std::move(clusters), std::move(names));
}

SimulationSummary monte_carlo(const StudyConfig& config) {
  validate_config(config);
  const std::size_t p = config.beta_true.size();
  const std::size_t d = p + 1;
  const int R = config.replications;

  Vector theta_true(config.beta_true);
  theta_true.push_back(config.phi_true);
  const double z_star = std_normal_quantile(0.5 + config.confidence / 2.0);

  std::vector<char> ok(R, 0);
  std::vector<Vector> estimates(R);
  std::vector<Vector> ses(R);
  Vector vmrs(R, std::numeric_limits<double>::quiet_NaN());

  parallel_for(R, config.threads, [&](std::size_t r) {
    try {
      const LongitudinalDataset data = gen_study_dataset(config, static_cast<int>(r) + 1);
      if (config.track_vmr) vmrs[r] = vmr(data);
      const FitResult res = fit(data);
      if (!res.converged) return;
      Vector est(res.theta_hat.beta);
      est.push_back(res.theta_hat.phi);
      estimates[r] = std::move(est);
      ses[r] = res.se;
      ok[r] = 1;
    } catch (const Error&) {
      // dropped, not retried: a retry would bias the Monte Carlo distribution
    }
  });

  SimulationSummary out;
  out.R_requested = R;
  out.bias.assign(d, 0.0);
  out.rmse.assign(d, 0.0);
  out.coverage.assign(d, 0.0);

  int r_eff = 0;
  for (int r = 0; r < R; ++r) {
    if (!ok[r]) continue;
    ++r_eff;
    for (std::size_t k = 0; k < d; ++k) {
      const double dev = estimates[r][k] - theta_true[k];
      out.bias[k] += dev;
      out.rmse[k] += dev * dev;
      if (std::fabs(dev) <= z_star * ses[r][k]) out.coverage[k] += 1.0;
    }
  }
  out.R_effective = r_eff;
  if (r_eff == 0) throw AllReplicationsFailed("monte_carlo: no replication converged");
  for (std::size_t k = 0; k < d; ++k) {
    out.bias[k] /= r_eff;
    out.rmse[k] = std::sqrt(out.rmse[k] / r_eff);
    out.coverage[k] *= 100.0 / r_eff;
  }

  if (config.track_vmr) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int r = 0; r < R; ++r) {
      if (std::isnan(vmrs[r])) continue;
      lo = std::min(lo, vmrs[r]);
      hi = std::max(hi, vmrs[r]);
    }
    out.vmr_range = {lo, hi};
    out.has_vmr = true;
  }
  return out;
}

double vmr(const LongitudinalDataset& data) {
  if (data.total_measurements() < 2) throw DomainError("vmr: needs at least 2 measurements");
  double sum = 0.0;
  double count = 0.0;
  for (const Cluster& c : data.clusters())
    for (long long y : c.y) {
      sum += static_cast<double>(y);
      count += 1.0;
    }
  const double mean = sum / count;
  if (mean == 0.0) throw ZeroMean("vmr: all counts are zero");
  double ss = 0.0;
  for (const Cluster& c : data.clusters())
    for (long long y : c.y) {
      const double dev = static_cast<double>(y) - mean;
      ss += dev * dev;
    }
  return (ss / (count - 1.0)) / mean;
}

}  // namespace mnb
