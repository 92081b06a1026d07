#pragma once

#include <cstdint>
#include <cmath>
#include <string>
#include <string_view>

namespace phasor {

// Counter-based splittable RNG. Each stream is keyed by an arbitrary set of
// strings/integers folded into a 64-bit key; draws are a pure function of
// (key, counter), so results do not depend on call order across simulations
// or on how sweeps are partitioned between workers.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t key) : key_(key) {}

  static std::uint64_t fold(std::uint64_t key, std::string_view s);
  static std::uint64_t fold(std::uint64_t key, std::uint64_t v);

  // Derive a child stream without disturbing this one.
  Rng child(std::string_view name) const { return Rng(fold(key_, name)); }
  Rng child(std::uint64_t v) const { return Rng(fold(key_, v)); }

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  double normal();                        // standard normal
  double normal(double mu, double sigma) { return mu + sigma * normal(); }
  std::uint64_t uniform_index(std::uint64_t n);  // [0, n)

  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0x9e3779b97f4a7c15ull;
  std::uint64_t counter_ = 0;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Convenience: stream keyed by (experiment id, seed, stream name).
Rng make_stream(std::string_view experiment_id, std::uint64_t seed,
                std::string_view stream);

}  // namespace phasor
