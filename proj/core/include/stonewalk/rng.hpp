#pragma once

#include <cstdint>
#include <string_view>

namespace stonewalk {

// Deterministic counter-seeded generator (xoshiro256**). Streams are derived
// from (seed, stream id), so independent consumers (one per environment, one
// per named subsystem) draw from non-overlapping sequences regardless of
// scheduling order. Distributions are implemented here rather than with
// <random> so byte-level reproducibility does not depend on the standard
// library implementation.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Named streams, e.g. Rng(seed, Rng::stream_id("policy_init")).
  static std::uint64_t stream_id(std::string_view name);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (consumes two u64 per pair, caches one).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Bernoulli with probability p.
  bool chance(double p) { return uniform01() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Derive an independent child generator; advances this one.
  Rng split();

  // Full generator state, for checkpoint/resume round-trips.
  struct State {
    std::uint64_t words[4] = {0, 0, 0, 0};
    double cached_normal = 0.0;
    std::uint8_t has_cached_normal = 0;
  };
  State state() const {
    return State{{s_[0], s_[1], s_[2], s_[3]}, cached_normal_,
                 static_cast<std::uint8_t>(has_cached_normal_ ? 1 : 0)};
  }
  void set_state(const State& st) {
    for (int i = 0; i < 4; ++i) s_[i] = st.words[i];
    cached_normal_ = st.cached_normal;
    has_cached_normal_ = st.has_cached_normal != 0;
  }

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// SplitMix64 step, exposed for seed hashing (terrain seeds, episode seeds).
std::uint64_t splitmix64(std::uint64_t& state);

// Order-independent combination of seed material into a new 64-bit seed.
std::uint64_t hash_seeds(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace stonewalk
