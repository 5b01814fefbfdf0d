#include "mnb/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "mnb/rng.hpp"
#include "mnb/special_functions.hpp"

namespace mnb {

LongitudinalDataset::LongitudinalDataset(std::vector<Cluster> clusters,
                                         std::vector<std::string> covariate_names)
    : clusters_(std::move(clusters)), covariate_names_(std::move(covariate_names)) {
  if (clusters_.empty()) throw DataDegenerate("dataset: needs at least one cluster");
  const std::size_t p = covariate_names_.size();
  std::unordered_set<std::string> seen_names(covariate_names_.begin(), covariate_names_.end());
  if (seen_names.size() != p) throw DomainError("dataset: covariate names must be distinct");

  for (const Cluster& c : clusters_) {
    if (c.y.empty()) throw EmptyCluster("dataset: cluster '" + c.id + "' has no measurements");
    if (c.X.rows() != c.y.size() || c.offset.size() != c.y.size() || c.X.cols() != p)
      throw DomainError("dataset: dimension mismatch in cluster '" + c.id + "'");
    for (long long v : c.y)
      if (v < 0) throw NegativeCount("dataset: negative count in cluster '" + c.id + "'");
    for (double v : c.X.data())
      if (!std::isfinite(v)) throw DomainError("dataset: non-finite design entry in '" + c.id + "'");
    for (double v : c.offset)
      if (!std::isfinite(v)) throw DomainError("dataset: non-finite offset in '" + c.id + "'");
    total_measurements_ += c.y.size();
  }
}

LongitudinalDataset LongitudinalDataset::without(const std::vector<std::string>& exclude) const {
  std::unordered_set<std::string> drop(exclude.begin(), exclude.end());
  std::vector<Cluster> kept;
  kept.reserve(clusters_.size());
  for (const Cluster& c : clusters_)
    if (!drop.count(c.id)) kept.push_back(c);
  if (kept.size() == clusters_.size() && !exclude.empty())
    throw DomainError("without: no cluster matches the given ids");
  return LongitudinalDataset(std::move(kept), covariate_names_);
}

std::uint64_t LongitudinalDataset::digest() const {
  std::uint64_t h = 0x6d6e62ULL;
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
  auto mix_double = [&](double d) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, sizeof(bits));
    mix(bits);
  };
  auto mix_string = [&](const std::string& s) {
    mix(s.size());
    for (char ch : s) mix(static_cast<unsigned char>(ch));
  };

  for (const auto& name : covariate_names_) mix_string(name);
  for (const Cluster& c : clusters_) {
    mix_string(c.id);
    for (long long v : c.y) mix(static_cast<std::uint64_t>(v));
    for (double v : c.X.data()) mix_double(v);
    for (double v : c.offset) mix_double(v);
  }
  return h;
}

void ThetaParams::validate() const {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("theta: phi must be positive");
  for (double b : beta)
    if (!std::isfinite(b)) throw DomainError("theta: non-finite beta entry");
}

Vector linear_predictor(const ThetaParams& theta, const Cluster& cluster) {
  theta.validate();
  if (cluster.X.cols() != theta.beta.size())
    throw DomainError("linear_predictor: beta length does not match design columns");
  const std::size_t m = cluster.m();
  Vector mu(m);
  for (std::size_t j = 0; j < m; ++j) {
    double eta = cluster.offset[j];
    for (std::size_t k = 0; k < theta.beta.size(); ++k) eta += cluster.X(j, k) * theta.beta[k];
    if (eta > 700.0)
      throw NonFiniteMean("linear_predictor: eta=" + std::to_string(eta) + " in cluster '" +
                          cluster.id + "' overflows exp()");
    mu[j] = std::exp(eta);
  }
  return mu;
}

namespace detail {

double log_gamma_ratio(double phi, long long k) {
  // Gamma(phi+k)/Gamma(phi) = phi (phi+1) ... (phi+k-1); stay in log space.
  return log_gamma(phi + static_cast<double>(k)) - log_gamma(phi);
}

ClusterWork cluster_work(const ThetaParams& theta, const Cluster& cluster) {
  ClusterWork w;
  w.mu = linear_predictor(theta, cluster);
  w.mu_plus = 0.0;
  for (double m : w.mu) w.mu_plus += m;
  w.y_plus = cluster.y_total();
  return w;
}

double cluster_score_phi(double phi, double mu_plus, long long y_plus) {
  double lead;
  if (y_plus <= 1000000LL) {
    lead = 0.0;
    for (long long j = 0; j < y_plus; ++j) lead += 1.0 / (static_cast<double>(j) + phi);
  } else {
    lead = digamma(phi + static_cast<double>(y_plus)) - digamma(phi);
  }
  const double denom = phi + mu_plus;
  return lead - std::log1p(mu_plus / phi) + (mu_plus - static_cast<double>(y_plus)) / denom;
}

Vector cluster_score(const ThetaParams& theta, const Cluster& cluster, const ClusterWork& w) {
  const std::size_t p = theta.beta.size();
  Vector u(p + 1, 0.0);
  const double a_i = (theta.phi + static_cast<double>(w.y_plus)) / (theta.phi + w.mu_plus);
  for (std::size_t j = 0; j < cluster.m(); ++j) {
    const double resid = static_cast<double>(cluster.y[j]) - a_i * w.mu[j];
    for (std::size_t k = 0; k < p; ++k) u[k] += resid * cluster.X(j, k);
  }
  u[p] = cluster_score_phi(theta.phi, w.mu_plus, w.y_plus);
  return u;
}

}  // namespace detail

double mnb_log_pmf(const std::vector<long long>& y, const Vector& mu, double phi) {
  if (y.size() != mu.size()) throw DomainError("mnb_log_pmf: length mismatch");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("mnb_log_pmf: phi must be positive");

  long long y_plus = 0;
  double mu_plus = 0.0;
  double sum_y_log_mu = 0.0;
  double sum_lgamma_y1 = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] < 0) throw DomainError("mnb_log_pmf: negative count");
    if (!(mu[j] > 0.0) || !std::isfinite(mu[j]))
      throw DomainError("mnb_log_pmf: mu must be positive");
    y_plus += y[j];
    mu_plus += mu[j];
    sum_y_log_mu += static_cast<double>(y[j]) * std::log(mu[j]);
    sum_lgamma_y1 += log_gamma(static_cast<double>(y[j]) + 1.0);
  }
  const double yp = static_cast<double>(y_plus);
  // phi ln phi - (phi + y+) ln(phi + mu+) == -phi log1p(mu+/phi) - y+ ln(phi + mu+)
  return detail::log_gamma_ratio(phi, y_plus) - sum_lgamma_y1 - phi * std::log1p(mu_plus / phi) -
         yp * std::log(phi + mu_plus) + sum_y_log_mu;
}

double log_likelihood(const ThetaParams& theta, const LongitudinalDataset& data) {
  double ll = 0.0;
  for (const Cluster& c : data.clusters()) {
    const Vector mu = linear_predictor(theta, c);
    ll += mnb_log_pmf(c.y, mu, theta.phi);
  }
  return ll;
}

Vector score(const ThetaParams& theta, const LongitudinalDataset& data) {
  theta.validate();
  const std::size_t p = data.p();
  Vector u(p + 1, 0.0);
  for (const Cluster& c : data.clusters()) {
    const auto w = detail::cluster_work(theta, c);
    const Vector ui = detail::cluster_score(theta, c, w);
    for (std::size_t k = 0; k <= p; ++k) u[k] += ui[k];
  }
  return u;
}

SymMatrix observed_information(const ThetaParams& theta, const LongitudinalDataset& data) {
  theta.validate();
  const std::size_t p = data.p();
  SymMatrix info(p + 1);
  Vector s_k(p);  // sum_j mu_ij x_ijk for the current cluster

  for (const Cluster& c : data.clusters()) {
    const auto w = detail::cluster_work(theta, c);
    const double phi = theta.phi;
    const double denom = phi + w.mu_plus;
    const double yp = static_cast<double>(w.y_plus);
    const double a_i = (phi + yp) / denom;

    std::fill(s_k.begin(), s_k.end(), 0.0);
    for (std::size_t j = 0; j < c.m(); ++j)
      for (std::size_t k = 0; k < p; ++k) s_k[k] += w.mu[j] * c.X(j, k);

    // -l_bb = a_i sum_j x x^T mu - a_i/(phi+mu+) S S^T
    for (std::size_t k = 0; k < p; ++k) {
      for (std::size_t l = k; l < p; ++l) {
        double m_kl = 0.0;
        for (std::size_t j = 0; j < c.m(); ++j) m_kl += c.X(j, k) * c.X(j, l) * w.mu[j];
        info.add(k, l, a_i * m_kl - a_i / denom * s_k[k] * s_k[l]);
      }
    }

    // -l_bphi = (mu+ - y+)/(phi+mu+)^2 * S
    const double bphi = (w.mu_plus - yp) / (denom * denom);
    for (std::size_t k = 0; k < p; ++k) info.add(k, p, bphi * s_k[k]);

    // -l_phiphi = sum_{s<y+} (s+phi)^-2 - mu+/(phi (phi+mu+)) + (mu+ - y+)/(phi+mu+)^2
    double tail;
    if (w.y_plus <= 1000000LL) {
      tail = 0.0;
      for (long long s = 0; s < w.y_plus; ++s) {
        const double t = static_cast<double>(s) + phi;
        tail += 1.0 / (t * t);
      }
    } else {
      tail = trigamma(phi) - trigamma(phi + yp);
    }
    info.add(p, p, tail - w.mu_plus / (phi * denom) + (w.mu_plus - yp) / (denom * denom));
  }
  return info;
}

MomentSummary marginal_moments(const ThetaParams& theta, const Cluster& cluster) {
  const Vector mu = linear_predictor(theta, cluster);
  const double phi = theta.phi;
  const std::size_t m = mu.size();
  MomentSummary out{mu, SymMatrix(m), SymMatrix(m)};
  for (std::size_t j = 0; j < m; ++j) {
    out.cov.set(j, j, mu[j] + mu[j] * mu[j] / phi);
    out.corr.set(j, j, 1.0);
    for (std::size_t k = j + 1; k < m; ++k) {
      out.cov.set(j, k, mu[j] * mu[k] / phi);
      out.corr.set(j, k, std::sqrt(mu[j] * mu[k]) /
                             (std::sqrt(phi + mu[j]) * std::sqrt(phi + mu[k])));
    }
  }
  return out;
}

}  // namespace mnb
