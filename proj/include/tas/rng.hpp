#pragma once

#include <cstdint>
#include <random>

namespace tas {

std::uint64_t splitmix64(std::uint64_t x);

// Seeded generator with hand-written distributions; std:: distributions are
// implementation-defined, and outputs must be reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  int uniform_int(int lo, int hi);        // inclusive bounds
  double normal();                        // standard normal
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tas
