#include "mnb/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mnb/special_functions.hpp"

namespace mnb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double loglik_guarded(const ThetaParams& theta, const LongitudinalDataset& data) {
  try {
    return log_likelihood(theta, data);
  } catch (const NonFiniteMean&) {
    return kNegInf;  // line search treats overflow as a rejected step
  }
}

void validate_design(const LongitudinalDataset& data) {
  const std::size_t p = data.p();
  if (data.n() < p + 1)
    throw DataDegenerate("fit: needs at least p+1 clusters (n=" + std::to_string(data.n()) +
                         ", p=" + std::to_string(p) + ")");

  long long total = 0;
  for (const Cluster& c : data.clusters()) total += c.y_total();
  if (total == 0) throw DataDegenerate("fit: all counts are zero");

  for (std::size_t k = 0; k < p; ++k) {
    double first = data.clusters().front().X(0, k);
    bool constant = true;
    for (const Cluster& c : data.clusters()) {
      for (std::size_t j = 0; j < c.m(); ++j)
        if (c.X(j, k) != first) {
          constant = false;
          break;
        }
      if (!constant) break;
    }
    if (constant && first != 1.0)
      throw DataDegenerate("fit: covariate column '" + data.covariate_names()[k] +
                           "' is constant and not an intercept");
  }
}

// theta <-> unconstrained coordinates zeta = (beta, ln phi)
Vector to_zeta(const ThetaParams& t, bool log_scale) {
  Vector z(t.beta);
  z.push_back(log_scale ? std::log(t.phi) : t.phi);
  return z;
}

ThetaParams to_theta(const Vector& z, bool log_scale) {
  ThetaParams t;
  t.beta.assign(z.begin(), z.end() - 1);
  t.phi = log_scale ? std::exp(z.back()) : z.back();
  return t;
}

Vector zeta_gradient(const ThetaParams& theta, const Vector& u, bool log_scale) {
  Vector g(u);
  if (log_scale) g.back() *= theta.phi;
  return g;
}

double inf_norm(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Method-of-moments dispersion start from the Poisson baseline.
double initial_phi(const PoissonFit& base, const LongitudinalDataset& data) {
  double sum_mu_sq = 0.0;
  for (const Vector& mu : base.fitted_means)
    for (double m : mu) sum_mu_sq += m * m;
  const double excess =
      std::max(base.pearson - static_cast<double>(data.total_measurements()), 1e-3);
  return std::clamp(sum_mu_sq / excess, 0.01, 100.0);
}

struct NewtonPolishResult {
  Vector zeta;
  int iterations = 0;
};

// A few guarded Newton steps on (beta, ln phi) drive the score norm far below
// the BFGS exit level, so downstream stationarity checks are never marginal.
NewtonPolishResult newton_polish(Vector zeta, const LongitudinalDataset& data,
                                 bool log_scale, double target) {
  NewtonPolishResult out{zeta, 0};
  const std::size_t d = zeta.size();
  double ll = loglik_guarded(to_theta(zeta, log_scale), data);
  for (int it = 0; it < 20; ++it) {
    const ThetaParams theta = to_theta(out.zeta, log_scale);
    const Vector u = score(theta, data);
    if (inf_norm(u) <= target) break;

    SymMatrix info = observed_information(theta, data);
    if (log_scale) {
      // transform to (beta, eta) with eta = ln phi:
      //   I_be = phi * I_bphi,  I_ee = phi^2 * I_phiphi - phi * U_phi
      const std::size_t p = d - 1;
      for (std::size_t k = 0; k < p; ++k) info.set(k, p, info(k, p) * theta.phi);
      info.set(p, p, info(p, p) * theta.phi * theta.phi - theta.phi * u[p]);
    }
    Vector g = zeta_gradient(theta, u, log_scale);
    Vector step;
    try {
      step = cholesky_solve(info, g);
    } catch (const NotPositiveDefinite&) {
      break;  // keep the BFGS point
    }

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      Vector trial(out.zeta);
      for (std::size_t k = 0; k < d; ++k) trial[k] += t * step[k];
      const double ll_trial = loglik_guarded(to_theta(trial, log_scale), data);
      if (ll_trial >= ll - 1e-12 * std::fabs(ll)) {
        out.zeta = trial;
        ll = ll_trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++out.iterations;
    if (!accepted) break;
  }
  return out;
}

FitResult assemble(const LongitudinalDataset& data, const ThetaParams& theta, int iterations,
                   bool hit_iteration_cap, double grad_tol) {
  const std::size_t p = data.p();
  const double ll = log_likelihood(theta, data);
  const Vector u = score(theta, data);
  const double gnorm = inf_norm(u);
  const double scale = std::max(1.0, std::fabs(ll) / static_cast<double>(data.n()));

  FitResult r{theta,
              ll,
              observed_information(theta, data),
              Vector(p + 1, kNaN),
              Vector(p + 1, kNaN),
              Vector(p + 1, kNaN),
              1.0 / std::sqrt(theta.phi),
              false,
              iterations,
              gnorm,
              ""};

  bool info_pd = true;
  try {
    const SymMatrix cov = Cholesky(r.info).inverse();
    for (std::size_t k = 0; k <= p; ++k) r.se[k] = std::sqrt(cov(k, k));
    for (std::size_t k = 0; k < p; ++k) {
      r.z[k] = theta.beta[k] / r.se[k];
      r.p_values[k] = 2.0 * std_normal_cdf(-std::fabs(r.z[k]));
    }
    // no z/p reported for phi
  } catch (const NotPositiveDefinite& e) {
    info_pd = false;
    r.diagnostic = std::string("observed information not positive definite: ") + e.what();
  }

  const bool grad_ok = gnorm <= grad_tol * scale;
  r.converged = grad_ok && info_pd && !hit_iteration_cap;
  if (!grad_ok && r.diagnostic.empty())
    r.diagnostic = "score norm " + std::to_string(gnorm) + " above tolerance";
  if (hit_iteration_cap) r.diagnostic = "maximum iterations exceeded";
  return r;
}

}  // namespace

PoissonFit poisson_fit(const LongitudinalDataset& data) {
  validate_design(data);
  const std::size_t p = data.p();

  // start at zero, with the intercept (if any) set to the log of the pooled rate
  Vector beta(p, 0.0);
  {
    long long total_y = 0;
    double total_e = 0.0;
    for (const Cluster& c : data.clusters()) {
      total_y += c.y_total();
      for (double o : c.offset) total_e += std::exp(std::min(o, 700.0));
    }
    const double rate = std::log(std::max(static_cast<double>(total_y), 0.5) / total_e);
    for (std::size_t k = 0; k < p; ++k) {
      bool all_ones = true;
      for (const Cluster& c : data.clusters())
        for (std::size_t j = 0; j < c.m(); ++j)
          if (c.X(j, k) != 1.0) {
            all_ones = false;
            break;
          }
      if (all_ones) {
        beta[k] = rate;
        break;
      }
    }
  }

  auto poisson_ll = [&](const Vector& b) {
    ThetaParams t{b, 1.0};
    double ll = 0.0;
    for (const Cluster& c : data.clusters()) {
      Vector mu;
      try {
        mu = linear_predictor(t, c);
      } catch (const NonFiniteMean&) {
        return kNegInf;
      }
      for (std::size_t j = 0; j < c.m(); ++j)
        ll += static_cast<double>(c.y[j]) * std::log(mu[j]) - mu[j] -
              log_gamma(static_cast<double>(c.y[j]) + 1.0);
    }
    return ll;
  };

  double ll = poisson_ll(beta);
  double gnorm = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector g(p, 0.0);
    SymMatrix h(p);
    for (const Cluster& c : data.clusters()) {
      const Vector mu = linear_predictor(ThetaParams{beta, 1.0}, c);
      for (std::size_t j = 0; j < c.m(); ++j) {
        const double r = static_cast<double>(c.y[j]) - mu[j];
        for (std::size_t k = 0; k < p; ++k) {
          g[k] += r * c.X(j, k);
          for (std::size_t l = k; l < p; ++l) h.add(k, l, mu[j] * c.X(j, k) * c.X(j, l));
        }
      }
    }
    gnorm = inf_norm(g);
    if (gnorm <= 1e-8) break;

    Vector step;
    try {
      step = cholesky_solve(h, g);
    } catch (const NotPositiveDefinite&) {
      throw DataDegenerate("poisson_fit: singular weighted design");
    }
    double t = 1.0;
    for (int half = 0; half < 40; ++half) {
      Vector trial(beta);
      for (std::size_t k = 0; k < p; ++k) trial[k] += t * step[k];
      const double ll_trial = poisson_ll(trial);
      if (ll_trial >= ll - 1e-12 * std::fabs(ll)) {
        beta = trial;
        ll = ll_trial;
        break;
      }
      t *= 0.5;
    }
  }
  if (gnorm > 1e-8)
    throw MaxIterationsExceeded("poisson_fit: gradient norm " + std::to_string(gnorm));

  PoissonFit out;
  out.beta_hat = beta;
  out.loglik = ll;
  out.grad_norm = gnorm;
  for (const Cluster& c : data.clusters()) {
    Vector mu = linear_predictor(ThetaParams{beta, 1.0}, c);
    for (std::size_t j = 0; j < c.m(); ++j) {
      const double r = static_cast<double>(c.y[j]) - mu[j];
      out.pearson += r * r / mu[j];
    }
    out.fitted_means.push_back(std::move(mu));
  }
  return out;
}

FitResult fit(const LongitudinalDataset& data, const FitOptions& opts) {
  if (!(opts.grad_tol > 0.0)) throw DomainError("fit: grad_tol must be positive");
  if (opts.max_iter < 1) throw DomainError("fit: max_iter must be >= 1");
  validate_design(data);
  const std::size_t p = data.p();
  const std::size_t d = p + 1;
  const bool log_scale = opts.phi_log_scale;

  ThetaParams start;
  if (opts.init) {
    start = *opts.init;
    start.validate();
    if (start.beta.size() != p) throw DomainError("fit: init beta length mismatch");
  } else {
    const PoissonFit base = poisson_fit(data);
    start.beta = base.beta_hat;
    start.phi = initial_phi(base, data);
  }

  Vector zeta = to_zeta(start, log_scale);
  double ll = loglik_guarded(start, data);
  if (ll == kNegInf) throw NonFiniteMean("fit: starting point overflows the linear predictor");

  ThetaParams theta = start;
  Vector u = score(theta, data);
  Vector g = zeta_gradient(theta, u, log_scale);

  // inverse-Hessian approximation for the minimization of -loglik
  std::vector<Vector> h_inv(d, Vector(d, 0.0));
  auto reset_h = [&] {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) h_inv[i][j] = (i == j) ? 1.0 : 0.0;
  };
  reset_h();

  auto scale_of = [&](double loglik_value) {
    return std::max(1.0, std::fabs(loglik_value) / static_cast<double>(data.n()));
  };

  int iter = 0;
  bool hit_cap = false;
  bool stalled = false;
  for (; iter < opts.max_iter; ++iter) {
    if (inf_norm(u) <= opts.grad_tol * scale_of(ll)) break;

    // ascent direction d = H * g
    Vector dir(d, 0.0);
    double dir_dot_g = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += h_inv[i][j] * g[j];
      dir[i] = acc;
      dir_dot_g += acc * g[i];
    }
    if (!(dir_dot_g > 0.0)) {
      reset_h();
      for (std::size_t i = 0; i < d; ++i) dir[i] = g[i];
      dir_dot_g = 0.0;
      for (std::size_t i = 0; i < d; ++i) dir_dot_g += g[i] * g[i];
    }

    // backtracking Armijo line search (c1 = 1e-4, shrink 0.5)
    double t = 1.0;
    Vector zeta_new;
    double ll_new = kNegInf;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      zeta_new = zeta;
      for (std::size_t i = 0; i < d; ++i) zeta_new[i] += t * dir[i];
      ll_new = loglik_guarded(to_theta(zeta_new, log_scale), data);
      if (ll_new >= ll + 1e-4 * t * dir_dot_g) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      stalled = true;
      break;
    }

    const ThetaParams theta_new = to_theta(zeta_new, log_scale);
    const Vector u_new = score(theta_new, data);
    const Vector g_new = zeta_gradient(theta_new, u_new, log_scale);

    // BFGS update in minimization convention: yk = -(g_new - g)
    Vector s(d), yk(d);
    double sy = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      s[i] = zeta_new[i] - zeta[i];
      yk[i] = g[i] - g_new[i];
      sy += s[i] * yk[i];
    }
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      Vector hy(d, 0.0);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) hy[i] += h_inv[i][j] * yk[j];
      double yhy = 0.0;
      for (std::size_t i = 0; i < d; ++i) yhy += yk[i] * hy[i];
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          h_inv[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] -
                         rho * (s[i] * hy[j] + hy[i] * s[j]);
    }

    zeta = zeta_new;
    ll = ll_new;
    theta = theta_new;
    u = u_new;
    g = g_new;
  }
  if (iter >= opts.max_iter && inf_norm(u) > opts.grad_tol * scale_of(ll)) hit_cap = true;

  int polish_iters = 0;
  if (!hit_cap) {
    const double target =
        std::min(opts.grad_tol * scale_of(ll) * 1e-3, 1e-8 * scale_of(ll));
    NewtonPolishResult polish = newton_polish(zeta, data, log_scale, std::max(target, 1e-11));
    zeta = polish.zeta;
    polish_iters = polish.iterations;
    theta = to_theta(zeta, log_scale);
  }
  (void)stalled;

  return assemble(data, theta, iter + polish_iters, hit_cap, opts.grad_tol);
}

FitResult refit_excluding(const LongitudinalDataset& data,
                          const std::vector<std::string>& exclude,
                          const ThetaParams& warm_start, const FitOptions& opts) {
  LongitudinalDataset reduced = exclude.empty() ? data : data.without(exclude);
  FitOptions o = opts;
  o.init = warm_start;
  return fit(reduced, o);
}

}  // namespace mnb
