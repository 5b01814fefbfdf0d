#include "mnb/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace mnb {

Vector SymMatrix::multiply(const Vector& x) const {
  Vector y(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = 0.0;
    const double* row = a_.data() + i * dim_;
    for (std::size_t j = 0; j < dim_; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Cholesky::Cholesky(const SymMatrix& a) : dim_(a.dim()), l_(dim_ * dim_, 0.0) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) max_diag = std::max(max_diag, std::fabs(a(i, i)));
  const double pivot_floor =
      static_cast<double>(dim_) * std::numeric_limits<double>::epsilon() * max_diag;

  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= l_[i * dim_ + k] * l_[j * dim_ + k];
      if (i == j) {
        if (!(sum > pivot_floor))
          throw NotPositiveDefinite("Cholesky: pivot " + std::to_string(sum) +
                                    " at index " + std::to_string(i));
        l_[i * dim_ + i] = std::sqrt(sum);
      } else {
        l_[i * dim_ + j] = sum / l_[j * dim_ + j];
      }
    }
  }
}

Vector Cholesky::solve(const Vector& b) const {
  if (b.size() != dim_) throw DomainError("Cholesky::solve: dimension mismatch");
  Vector x(b);
  for (std::size_t i = 0; i < dim_; ++i) {
    double sum = x[i];
    for (std::size_t k = 0; k < i; ++k) sum -= l_[i * dim_ + k] * x[k];
    x[i] = sum / l_[i * dim_ + i];
  }
  for (std::size_t ii = dim_; ii-- > 0;) {
    double sum = x[ii];
    for (std::size_t k = ii + 1; k < dim_; ++k) sum -= l_[k * dim_ + ii] * x[k];
    x[ii] = sum / l_[ii * dim_ + ii];
  }
  return x;
}

SymMatrix Cholesky::inverse() const {
  SymMatrix inv(dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    Vector e(dim_, 0.0);
    e[j] = 1.0;
    Vector col = solve(e);
    for (std::size_t i = j; i < dim_; ++i) inv.set(i, j, col[i]);
  }
  return inv;
}

Vector cholesky_solve(const SymMatrix& a, const Vector& b) { return Cholesky(a).solve(b); }

double quadratic_form(const SymMatrix& a, const Vector& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) row += a(i, j) * x[j];
    acc += x[i] * row;
  }
  return acc;
}

namespace {

// splitmix64; used only for the deterministic power-iteration start vector.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

EigPair max_eigpair(const SymMatrix& a) {
  const std::size_t n = a.dim();

  Vector v(n);
  std::uint64_t state = 0x6d6e622d65696721ULL ^ (0x51ULL * n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    state = mix64(state);
    v[i] = 0.25 + static_cast<double>(state >> 11) * 0x1.0p-53;  // in [0.25, 1.25)
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  for (auto& vi : v) vi /= norm;

  const int max_iter = 20000 + 200 * static_cast<int>(n);
  double lambda = 0.0;
  double residual = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iter; ++iter) {
    Vector av = a.multiply(v);
    lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) lambda += v[i] * av[i];  // Rayleigh quotient

    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      residual = std::max(residual, std::fabs(av[i] - lambda * v[i]));
    if (residual <= 1e-8 * std::max(lambda, 0.0) + 1e-300) {
      for (std::size_t i = 0; i < n; ++i) {
        if (std::fabs(v[i]) > 1e-12) {
          if (v[i] < 0.0)
            for (auto& vi : v) vi = -vi;
          break;
        }
      }
      return {std::max(lambda, 0.0), v};
    }

    double av_norm = 0.0;
    for (double x : av) av_norm += x * x;
    av_norm = std::sqrt(av_norm);
    if (av_norm == 0.0) {
      // Av = 0 with a strictly positive start vector: the matrix is zero.
      return {0.0, v};
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / av_norm;
  }
  throw ConvergenceFailure("max_eigpair: power iteration did not converge", max_iter,
                           residual);
}

}  // namespace mnb
