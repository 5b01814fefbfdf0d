#include "mnb/influence.hpp"

#include <cmath>
#include <limits>

#include "mnb/parallel.hpp"
#include "mnb/special_functions.hpp"

namespace mnb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// psi(phi+k) - psi(phi), exact finite sum on integer k up to 1e6.
double digamma_ratio(double phi, long long k) {
  if (k <= 1000000LL) {
    double s = 0.0;
    for (long long j = 0; j < k; ++j) s += 1.0 / (static_cast<double>(j) + phi);
    return s;
  }
  return digamma(phi + static_cast<double>(k)) - digamma(phi);
}

// psi'(phi+k) - psi'(phi) = -sum_{s<k} (s+phi)^-2.
double trigamma_ratio(double phi, long long k) {
  if (k <= 1000000LL) {
    double s = 0.0;
    for (long long j = 0; j < k; ++j) {
      const double t = static_cast<double>(j) + phi;
      s -= 1.0 / (t * t);
    }
    return s;
  }
  return trigamma(phi + static_cast<double>(k)) - trigamma(phi);
}

Vector design_weighted_sums(const Cluster& c, const Vector& mu) {
  Vector s(c.X.cols(), 0.0);
  for (std::size_t j = 0; j < c.m(); ++j)
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += mu[j] * c.X(j, k);
  return s;
}

bool is_dummy_column(const LongitudinalDataset& data, std::size_t k) {
  for (const Cluster& c : data.clusters())
    for (std::size_t j = 0; j < c.m(); ++j) {
      const double v = c.X(j, k);
      if (v != 0.0 && v != 1.0) return false;
    }
  return true;
}

double column_sd(const LongitudinalDataset& data, std::size_t k) {
  double sum = 0.0, n = 0.0;
  for (const Cluster& c : data.clusters())
    for (std::size_t j = 0; j < c.m(); ++j) {
      sum += c.X(j, k);
      n += 1.0;
    }
  const double mean = sum / n;
  double ss = 0.0;
  for (const Cluster& c : data.clusters())
    for (std::size_t j = 0; j < c.m(); ++j) {
      const double d = c.X(j, k) - mean;
      ss += d * d;
    }
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

GlobalInfluenceReport global_influence(const FitResult& fit, const LongitudinalDataset& data,
                                       const FitOptions& opts, int threads) {
  if (!fit.converged) throw DomainError("global_influence: fit did not converge");
  if (data.n() < data.p() + 2)
    throw DomainError("global_influence: needs at least p+2 clusters");

  const std::size_t n = data.n();
  const std::size_t d = data.p() + 1;

  GlobalInfluenceReport out;
  out.cluster_ids.reserve(n);
  for (const Cluster& c : data.clusters()) out.cluster_ids.push_back(c.id);
  out.gd.assign(n, kNaN);
  out.ld.assign(n, kNaN);
  out.theta_deleted.assign(n, fit.theta_hat);
  out.ok.assign(n, false);

  parallel_for(n, threads, [&](std::size_t i) {
    try {
      const FitResult del =
          refit_excluding(data, {data.clusters()[i].id}, fit.theta_hat, opts);
      if (!del.converged) return;  // flagged missing
      Vector diff(d);
      for (std::size_t k = 0; k < d - 1; ++k)
        diff[k] = del.theta_hat.beta[k] - fit.theta_hat.beta[k];
      diff[d - 1] = del.theta_hat.phi - fit.theta_hat.phi;
      out.gd[i] = quadratic_form(fit.info, diff);
      out.ld[i] = 2.0 * (fit.loglik - log_likelihood(del.theta_hat, data));
      out.theta_deleted[i] = del.theta_hat;
      out.ok[i] = true;
    } catch (const Error&) {
      // refit failure stays flagged missing
    }
  });
  return out;
}

DeltaMatrix delta_matrix(const FitResult& fit, const LongitudinalDataset& data,
                         PerturbationScheme scheme, const DeltaMeta& meta) {
  if (!fit.converged) throw DomainError("delta_matrix: fit did not converge");
  const std::size_t p = data.p();
  const ThetaParams& th = fit.theta_hat;
  const double phi = th.phi;

  DeltaMatrix out;
  out.scheme = scheme;
  out.meta = meta;

  switch (scheme) {
    case PerturbationScheme::case_weight_subject: {
      // column i = per-cluster score contribution
      out.entries = Matrix(p + 1, data.n());
      for (std::size_t i = 0; i < data.n(); ++i) {
        const Cluster& c = data.clusters()[i];
        out.col_labels.push_back(c.id);
        const auto w = detail::cluster_work(th, c);
        const Vector u = detail::cluster_score(th, c, w);
        for (std::size_t k = 0; k <= p; ++k) out.entries(k, i) = u[k];
      }
      break;
    }

    case PerturbationScheme::case_weight_measurement: {
      out.entries = Matrix(p + 1, data.total_measurements());
      std::size_t col = 0;
      for (const Cluster& c : data.clusters()) {
        const auto w = detail::cluster_work(th, c);
        const double denom = phi + w.mu_plus;
        const double m_i = static_cast<double>(c.m());
        const Vector s = design_weighted_sums(c, w.mu);
        const double psi_diff = digamma_ratio(phi, w.y_plus);
        for (std::size_t j = 0; j < c.m(); ++j, ++col) {
          out.col_labels.push_back(c.id + ":" + std::to_string(j + 1));
          const double yij = static_cast<double>(c.y[j]);
          const double load = (phi / m_i + yij) / denom;
          for (std::size_t k = 0; k < p; ++k)
            out.entries(k, col) = yij * c.X(j, k) - load * s[k];
          out.entries(p, col) = psi_diff / m_i +
                                (1.0 + std::log(phi) - std::log(denom)) / m_i - load;
        }
      }
      break;
    }

    case PerturbationScheme::explanatory: {
      const std::size_t t_col = meta.covariate;
      if (t_col >= p) throw DomainError("delta_matrix: covariate index out of range");
      if (is_dummy_column(data, t_col))
        throw SchemeInapplicable("delta_matrix: explanatory perturbation needs a continuous "
                                 "covariate, column '" +
                                 data.covariate_names()[t_col] + "' is a dummy");
      double sx = meta.scale_sx;
      if (sx == 0.0) sx = column_sd(data, t_col);
      if (!(sx > 0.0)) throw DomainError("delta_matrix: scale factor S_x must be positive");
      out.meta.scale_sx = sx;

      const double beta_t = th.beta[t_col];
      out.entries = Matrix(p + 1, data.n());
      for (std::size_t i = 0; i < data.n(); ++i) {
        const Cluster& c = data.clusters()[i];
        out.col_labels.push_back(c.id);
        const auto w = detail::cluster_work(th, c);
        const double denom = phi + w.mu_plus;
        const double yp = static_cast<double>(w.y_plus);
        const double a_i = (phi + yp) / denom;
        const Vector s = design_weighted_sums(c, w.mu);

        // d/domega_i of the score: perturbing x_t by omega_i S_x scales the
        // column-t direction of each mu_ij
        for (std::size_t k = 0; k < p; ++k) {
          double v = -beta_t * sx * (phi + yp) * phi / (denom * denom) * s[k];
          if (k == t_col) v += sx * (yp - a_i * w.mu_plus);
          out.entries(k, i) = v;
        }
        out.entries(p, i) = beta_t * sx * w.mu_plus * (yp - w.mu_plus) / (denom * denom);
      }
      break;
    }

    case PerturbationScheme::dispersion: {
      // phi*_i = omega_i phi; at omega_0 = 1 the column is
      //   (phi (y+ - mu+)/(phi+mu+)^2 S_k,  h' + phi h'')
      // with h the per-cluster profile in phi.
      out.entries = Matrix(p + 1, data.n());
      for (std::size_t i = 0; i < data.n(); ++i) {
        const Cluster& c = data.clusters()[i];
        out.col_labels.push_back(c.id);
        const auto w = detail::cluster_work(th, c);
        const double denom = phi + w.mu_plus;
        const double yp = static_cast<double>(w.y_plus);
        const Vector s = design_weighted_sums(c, w.mu);

        const double bcoef = phi * (yp - w.mu_plus) / (denom * denom);
        for (std::size_t k = 0; k < p; ++k) out.entries(k, i) = bcoef * s[k];

        const double h1 = detail::cluster_score_phi(phi, w.mu_plus, w.y_plus);
        const double h2 = trigamma_ratio(phi, w.y_plus) + w.mu_plus / (phi * denom) +
                          (yp - w.mu_plus) / (denom * denom);
        out.entries(p, i) = h1 + phi * h2;
      }
      break;
    }
  }
  return out;
}

LocalInfluenceReport curvature(const DeltaMatrix& delta, const SymMatrix& info) {
  const std::size_t d = delta.entries.rows();
  const std::size_t v = delta.entries.cols();
  if (info.dim() != d) throw DomainError("curvature: info dimension mismatch");

  Cholesky chol(info);  // NotPositiveDefinite propagates

  // W = info^-1 Delta, then B = Delta^T W (PSD by construction)
  Matrix w(d, v);
  Vector col(d);
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < d; ++k) col[k] = delta.entries(k, c);
    const Vector sol = chol.solve(col);
    for (std::size_t k = 0; k < d; ++k) w(k, c) = sol[k];
  }
  SymMatrix b(v);
  for (std::size_t r = 0; r < v; ++r)
    for (std::size_t c = r; c < v; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += delta.entries(k, r) * w(k, c);
      b.set(r, c, acc);
    }

  LocalInfluenceReport out;
  out.scheme = delta.scheme;
  out.labels = delta.col_labels;
  out.c_i.resize(v);
  for (std::size_t i = 0; i < v; ++i) out.c_i[i] = 2.0 * b(i, i);

  const EigPair top = max_eigpair(b);
  out.c_dmax = 2.0 * top.value;
  out.d_max.resize(v);
  for (std::size_t i = 0; i < v; ++i) out.d_max[i] = std::fabs(top.vector[i]);

  double mean = 0.0;
  for (double ci : out.c_i) mean += ci;
  mean /= static_cast<double>(v);
  double sd = 0.0;
  if (v > 1) {
    for (double ci : out.c_i) sd += (ci - mean) * (ci - mean);
    sd = std::sqrt(sd / static_cast<double>(v - 1));
  }
  out.benchmark = mean + 2.0 * sd;
  return out;
}

Vector prd(const FitResult& fit_full, const FitResult& fit_reduced) {
  const std::size_t p = fit_full.theta_hat.beta.size();
  if (fit_reduced.theta_hat.beta.size() != p)
    throw ModelMismatch("prd: fits have different numbers of coefficients");

  Vector out(p + 1, kNaN);
  auto one = [](double full, double reduced) {
    if (std::fabs(full) < 1e-10) return kNaN;
    return (full - reduced) / full * 100.0;
  };
  out[0] = one(fit_full.theta_hat.phi, fit_reduced.theta_hat.phi);
  for (std::size_t k = 0; k < p; ++k)
    out[k + 1] = one(fit_full.theta_hat.beta[k], fit_reduced.theta_hat.beta[k]);
  return out;
}

}  // namespace mnb
