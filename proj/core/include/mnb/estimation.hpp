#pragma once

#include <optional>
#include <string>

#include "mnb/data.hpp"
#include "mnb/model.hpp"

namespace mnb {

struct FitOptions {
  std::optional<ThetaParams> init;
  double grad_tol = 1e-6;
  int max_iter = 500;
  bool phi_log_scale = true;  // optimize (beta, ln phi) so phi stays positive
};

struct FitResult {
  ThetaParams theta_hat;
  double loglik = 0.0;
  SymMatrix info;  // observed information at theta_hat, (beta..., phi) order
  Vector se;       // sqrt(diag(info^-1)), theta order
  Vector z;        // estimate/se for beta entries; NaN for phi (no test reported)
  Vector p_values; // two-sided standard normal; NaN for phi
  double lambda_hat = 0.0;  // phi_hat^(-1/2)
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;   // ||score||_inf at theta_hat, (beta, phi) scale
  std::string diagnostic;   // set when converged == false
};

struct PoissonFit {
  Vector beta_hat;
  std::vector<Vector> fitted_means;  // per cluster
  double loglik = 0.0;
  double pearson = 0.0;  // sum (y - mu)^2 / mu, the overdispersion screen
  double grad_norm = 0.0;
};

// Maximum likelihood fit by BFGS ascent with the analytic score, followed by
// Newton polishing on the observed information.
FitResult fit(const LongitudinalDataset& data, const FitOptions& opts = {});

// Independent-Poisson log-linear baseline with the same linear predictor and
// offset; also the source of default starting values.
PoissonFit poisson_fit(const LongitudinalDataset& data);

// Fit after removing the clusters whose ids are listed, warm-started at the
// full-data estimate.
FitResult refit_excluding(const LongitudinalDataset& data,
                          const std::vector<std::string>& exclude,
                          const ThetaParams& warm_start, const FitOptions& opts = {});

}  // namespace mnb
