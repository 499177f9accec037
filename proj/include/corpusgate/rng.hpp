#pragma once

#include <cstdint>
#include <random>

#include "corpusgate/hash.hpp"

namespace corpusgate {

// Explicit, seedable random state. Every sampled item owns one, derived from
// (base seed, repetition, item id) so no stream is shared between items.
//
// uniform() builds the double from the top 53 bits of the engine output; the
// standard distributions are implementation-defined and would make sampled
// labels differ between standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  uint64_t seed() const noexcept { return seed_; }

  uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Number of values drawn so far.
  uint64_t draws() const noexcept { return draws_; }

  // Independent child stream; does not advance this one.
  Rng split(uint64_t tag) const { return Rng(Fnv1a{}.u64(seed_).u64(tag).digest()); }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  uint64_t draws_ = 0;
};

}  // namespace corpusgate
