#pragma once

#include <stdexcept>
#include <string>

namespace mnb {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument values (x <= 0 for a special function, negative counts, ...).
struct DomainError : Error {
  using Error::Error;
};

// A matrix expected to be positive definite failed its Cholesky pivot test.
struct NotPositiveDefinite : Error {
  using Error::Error;
};

// An iterative routine hit its iteration cap.
struct ConvergenceFailure : Error {
  ConvergenceFailure(const std::string& what, int iterations, double residual)
      : Error(what), iterations(iterations), residual(residual) {}
  int iterations;
  double residual;
};

// Linear predictor overflowed the exp() guard.
struct NonFiniteMean : DomainError {
  using DomainError::DomainError;
};

// Dataset cannot support the requested model (all counts zero, too few clusters, ...).
struct DataDegenerate : DomainError {
  using DomainError::DomainError;
};

struct SingularInformation : Error {
  using Error::Error;
};

struct MaxIterationsExceeded : Error {
  using Error::Error;
};

// Perturbation scheme applied to a column it does not support.
struct SchemeInapplicable : DomainError {
  using DomainError::DomainError;
};

// PRD requested across fits of different model specifications.
struct ModelMismatch : DomainError {
  using DomainError::DomainError;
};

// VMR of an all-zero sample.
struct ZeroMean : DomainError {
  using DomainError::DomainError;
};

struct AllReplicationsFailed : Error {
  using Error::Error;
};

// CSV ingestion failures; each message names the offending column/row.
struct IngestError : DomainError {
  using DomainError::DomainError;
};
struct MissingColumn : IngestError {
  using IngestError::IngestError;
};
struct NonIntegerResponse : IngestError {
  using IngestError::IngestError;
};
struct NegativeCount : IngestError {
  using IngestError::IngestError;
};
struct UnseenLevel : IngestError {
  using IngestError::IngestError;
};
struct EmptyCluster : IngestError {
  using IngestError::IngestError;
};

}  // namespace mnb
