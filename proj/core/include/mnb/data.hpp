#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mnb/errors.hpp"
#include "mnb/linalg.hpp"

namespace mnb {

// One subject/cluster: counts y_ij, design rows x_ij^T and an additive offset
// on the log-mean scale (e.g. log exposure time).
struct Cluster {
  std::string id;
  std::vector<long long> y;  // m_i nonnegative counts
  Matrix X;                  // m_i x p
  Vector offset;             // m_i

  std::size_t m() const { return y.size(); }
  long long y_total() const {
    long long t = 0;
    for (long long v : y) t += v;
    return t;
  }
};

class LongitudinalDataset {
 public:
  LongitudinalDataset(std::vector<Cluster> clusters, std::vector<std::string> covariate_names);

  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  std::size_t n() const { return clusters_.size(); }
  std::size_t p() const { return covariate_names_.size(); }
  std::size_t total_measurements() const { return total_measurements_; }

  // New dataset without the clusters whose ids appear in `exclude`.
  LongitudinalDataset without(const std::vector<std::string>& exclude) const;

  // Structural digest over ids, counts, design entries, offsets and names.
  std::uint64_t digest() const;

 private:
  std::vector<Cluster> clusters_;
  std::vector<std::string> covariate_names_;
  std::size_t total_measurements_ = 0;
};

// theta = (beta^T, phi)^T; lambda = phi^(-1/2) is derived for reporting only.
struct ThetaParams {
  Vector beta;
  double phi = 1.0;

  void validate() const;
};

}  // namespace mnb
