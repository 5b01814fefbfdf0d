#pragma once

#include <cstdint>
#include <random>

namespace mnb {

// Deterministic random stream.  The engine is mt19937_64 (bit-identical across
// platforms) and every sampler below is implemented in-house, so a (seed,
// stream-key) pair reproduces the same draws on any build.  Substreams are
// derived by hashing the key tuple, which lets replications, clusters and
// envelope replicates run concurrently without sharing state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Substream for (seed, a, b), e.g. (seed, replication, cluster).
  static RngStream derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  // Uniform on [0,1).
  double uniform01();
  // Uniform on (0,1].
  double uniform_open01();
  // Standard normal via inverse-CDF transform.
  double normal();
  // Gamma(shape, rate) via Marsaglia-Tsang squeeze.
  double gamma(double shape, double rate);
  // Poisson(mean); inversion below mean 30, PTRS transformed rejection above.
  long long poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

// splitmix64 mixing step, also used for content digests.
std::uint64_t splitmix64(std::uint64_t z);

}  // namespace mnb
