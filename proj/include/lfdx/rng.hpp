#pragma once

#include <cstdint>
#include <random>

namespace lfdx {

/// Seeded random source shared by every stochastic component.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// derives doubles and bounded integers itself so that draws are identical
/// across standard library implementations. Copying an Rng copies its state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in the closed interval [lo, hi].
  int uniform_int(int lo, int hi);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent child seed from (seed, stream) with splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace lfdx
