#pragma once

#include "mnb/data.hpp"
#include "mnb/linalg.hpp"

namespace mnb {

// Marginal moments of one cluster under the MNB law:
//   E(y_ij) = mu_ij,  Var(y_ij) = mu_ij + mu_ij^2/phi,
//   Cov(y_ij, y_ij') = mu_ij mu_ij' / phi.
struct MomentSummary {
  Vector mean;
  SymMatrix cov;
  SymMatrix corr;
};

// mu_ij = exp(x_ij^T beta + offset_ij).  Throws NonFiniteMean when any linear
// predictor exceeds 700 (exp saturation).
Vector linear_predictor(const ThetaParams& theta, const Cluster& cluster);

// Joint log-pmf of one cluster's count vector:
//   lnG(phi + y+) - lnG(phi) - sum lnG(y_ij + 1) + phi ln phi
//     + sum y_ij ln mu_ij - (phi + y+) ln(phi + mu+).
double mnb_log_pmf(const std::vector<long long>& y, const Vector& mu, double phi);

double log_likelihood(const ThetaParams& theta, const LongitudinalDataset& data);

// (U_beta^T, U_phi)^T.  U_phi uses the finite-sum form sum_{j<y+} 1/(j+phi)
// for y+ <= 1e6 and the digamma difference above that.
Vector score(const ThetaParams& theta, const LongitudinalDataset& data);

// Observed information -l''(theta), assembled from the closed-form blocks.
SymMatrix observed_information(const ThetaParams& theta, const LongitudinalDataset& data);

MomentSummary marginal_moments(const ThetaParams& theta, const Cluster& cluster);

// Internals shared with the influence module (per-cluster quantities at theta).
namespace detail {

struct ClusterWork {
  Vector mu;        // m_i fitted means
  double mu_plus;   // sum_j mu_ij
  long long y_plus; // sum_j y_ij
};

ClusterWork cluster_work(const ThetaParams& theta, const Cluster& cluster);

// Per-cluster score contribution (length p+1), the building block of U and of
// the case-weight perturbation columns.
Vector cluster_score(const ThetaParams& theta, const Cluster& cluster,
                     const ClusterWork& w);

// U_phi contribution of one cluster.
double cluster_score_phi(double phi, double mu_plus, long long y_plus);

// ln Gamma(phi + k) - ln Gamma(phi) for integer k >= 0.
double log_gamma_ratio(double phi, long long k);

}  // namespace detail

}  // namespace mnb
