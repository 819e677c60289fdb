#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ladg {

// Portable deterministic RNG used for every stochastic choice in the library.
//
// Algorithm: xoshiro256++ (Blackman & Vigna), state seeded by four rounds of
// splitmix64. Doubles are (next() >> 11) * 2^-53; normals come from the basic
// Box-Muller transform with the second value cached; bounded integers use the
// 128-bit multiply-high reduction. Named substreams are derived by mixing an
// FNV-1a hash of the stream name into the base seed, so adding a consumer
// never shifts the draws of another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng derive(std::uint64_t seed, std::string_view stream_name);

  std::uint64_t next_u64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  double normal();                         // standard normal
  int uniform_int(int bound);              // [0, bound)

  // First k entries of a partial Fisher-Yates shuffle of 0..n-1.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::array<std::uint64_t, 4> state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace ladg
