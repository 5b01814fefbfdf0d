#pragma once

#include <cstddef>
#include <vector>

#include "mnb/errors.hpp"

namespace mnb {

using Vector = std::vector<double>;

// Dense row-major matrix, just big enough for design matrices and
// perturbation cross-derivative blocks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  const std::vector<double>& data() const { return a_; }

  Vector col(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = a_[i * cols_ + j];
    return c;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

// Symmetric matrix; set() writes both triangles so entries(i,j) == entries(j,i)
// holds exactly as stored.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {
    if (dim < 1) throw DomainError("SymMatrix: dim must be >= 1");
  }

  std::size_t dim() const { return dim_; }

  double operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }

  void set(std::size_t i, std::size_t j, double v) {
    a_[i * dim_ + j] = v;
    a_[j * dim_ + i] = v;
  }

  void add(std::size_t i, std::size_t j, double v) { set(i, j, a_[i * dim_ + j] + v); }

  const std::vector<double>& data() const { return a_; }

  Vector multiply(const Vector& x) const;

 private:
  std::size_t dim_;
  std::vector<double> a_;
};

// Cholesky factorization A = L L^T of a symmetric positive definite matrix.
// Throws NotPositiveDefinite when a pivot falls at or below
// dim * machine-epsilon * max-diagonal.
class Cholesky {
 public:
  explicit Cholesky(const SymMatrix& a);

  std::size_t dim() const { return dim_; }

  // Solves A x = b.
  Vector solve(const Vector& b) const;

  // Dense inverse of A (used for standard errors).
  SymMatrix inverse() const;

  // Entry L(i,j) of the lower factor (zero above the diagonal).
  double lower(std::size_t i, std::size_t j) const { return j <= i ? l_[i * dim_ + j] : 0.0; }

 private:
  std::size_t dim_;
  std::vector<double> l_;  // lower triangle, row-major
};

// Solves A x = b for symmetric positive definite A.
Vector cholesky_solve(const SymMatrix& a, const Vector& b);

// Quadratic form x^T A x.
double quadratic_form(const SymMatrix& a, const Vector& x);

struct EigPair {
  double value;
  Vector vector;  // unit 2-norm; first nonzero component positive
};

// Dominant eigenpair of a symmetric positive semidefinite matrix via power
// iteration with a deterministic seeded start vector.  Converges when the
// eigen-residual ||A v - lambda v||_inf <= 1e-8 * lambda; throws
// ConvergenceFailure (carrying iteration count and last residual) at the cap.
EigPair max_eigpair(const SymMatrix& a);

}  // namespace mnb
