#ifndef TRIALFIT_RNG_HPP
#define TRIALFIT_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace trialfit {

// Deterministic random source: mt19937_64 engine with explicit uniform and
// Box-Muller normal transforms, so streams are reproducible regardless of
// the standard library's distribution implementations.
//
// Substreams are derived with splitmix64 over (seed, key path); a
// participant's stream depends only on (master seed, participant index),
// never on how many other participants exist. Algorithm id: "mt19937_64/bm:1".
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n);

  // standard normal, Box-Muller (two uniforms per draw, no caching)
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // in-place Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static std::uint64_t splitmix64(std::uint64_t& state);

  // Child seed from a seed and a key path.
  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  Rng substream(std::uint64_t key) const { return Rng(derive(seed_, {key})); }

  static const char* algorithm_id() { return "mt19937_64/bm:1"; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace trialfit

#endif
