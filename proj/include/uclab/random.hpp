#pragma once

#include <cstdint>
#include <random>

namespace uclab {

// Seeded generator whose output is identical on every platform: the
// distribution is derived from raw mt19937_64 bits instead of the
// implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uclab
