#pragma once

#include <string>
#include <vector>

#include "mnb/estimation.hpp"

namespace mnb {

enum class PerturbationScheme {
  case_weight_subject,
  case_weight_measurement,
  explanatory,
  dispersion
};

struct DeltaMeta {
  std::size_t covariate = 0;  // explanatory scheme: perturbed column index
  double scale_sx = 0.0;      // explanatory scale factor; 0 = sample sd of the column
};

// Cross-derivative d^2 l(theta|omega) / dtheta domega^T at (theta_hat, omega_0).
// Rows follow theta order (beta_1..beta_p, phi); columns are perturbation
// coordinates (one per subject, or one per measurement).
struct DeltaMatrix {
  PerturbationScheme scheme = PerturbationScheme::case_weight_subject;
  Matrix entries;                       // (p+1) x v
  std::vector<std::string> col_labels;  // cluster id, or "id:j"
  DeltaMeta meta;
};

struct GlobalInfluenceReport {
  std::vector<std::string> cluster_ids;
  Vector gd;  // generalized Cook distance
  Vector ld;  // likelihood displacement
  std::vector<ThetaParams> theta_deleted;
  std::vector<bool> ok;  // false when the case-deletion refit failed
};

struct LocalInfluenceReport {
  PerturbationScheme scheme = PerturbationScheme::case_weight_subject;
  double c_dmax = 0.0;   // 2 * lambda_max(B)
  Vector d_max;          // |components| of the top eigenvector, unit 2-norm
  Vector c_i;            // total local curvature 2*B_ii per column
  double benchmark = 0.0;  // mean(c_i) + 2 sd(c_i)
  std::vector<std::string> labels;
};

// Case-deletion diagnostics: for each cluster i a warm-started refit gives
// theta_(i); GD_i is the squared distance in the full-data observed
// information metric and LD_i = 2{l(theta_hat) - l(theta_(i))} on full data.
GlobalInfluenceReport global_influence(const FitResult& fit, const LongitudinalDataset& data,
                                       const FitOptions& opts = {}, int threads = 1);

DeltaMatrix delta_matrix(const FitResult& fit, const LongitudinalDataset& data,
                         PerturbationScheme scheme, const DeltaMeta& meta = {});

// Normal curvature report from B = Delta^T info^-1 Delta (info = observed
// information, so B is PSD).
LocalInfluenceReport curvature(const DeltaMatrix& delta, const SymMatrix& info);

// Percentage relative deviations [(theta_hat - theta_star)/theta_hat] * 100,
// ordered (phi, beta_1..beta_p); entries with |theta_hat| < 1e-10 are NaN.
Vector prd(const FitResult& fit_full, const FitResult& fit_reduced);

}  // namespace mnb
