#pragma once

#include <cstdint>
#include <random>

namespace seth {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream split: stream `id` of root seed `root`. Streams for
/// different ids are decorrelated, so adding a consumer never shifts the
/// draws of another.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t id) noexcept {
  return splitmix64(splitmix64(root) ^ splitmix64(id ^ 0x5e7a11ULL));
}

namespace streams {
// Stream id layout. Node ids are < 256.
constexpr std::uint64_t node(int id) { return 0x100ULL + static_cast<std::uint64_t>(id); }
constexpr std::uint64_t link(int receiver_id) { return 0x10000ULL + static_cast<std::uint64_t>(receiver_id); }
constexpr std::uint64_t medium() { return 0x20000ULL; }
}  // namespace streams

/// Seeded generator with hand-written distributions so that draws are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [lo, hi], inclusive. Rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Box-Muller; always consumes exactly two uniforms.
  double normal(double mean, double sigma);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace seth
