#pragma once

#include <cstdint>
#include <random>

namespace ost {

// Seeded generator whose output is identical on every platform: the engine
// is std::mt19937_64 (fully specified by the standard) and the
// distributions below are implemented here instead of relying on the
// library's unspecified algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal by the Marsaglia polar method.
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ost
