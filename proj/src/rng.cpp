#include "phasor/rng.hpp"

namespace phasor {

namespace {

// splitmix64 finalizer; good avalanche, cheap, stateless.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::fold(std::uint64_t key, std::string_view s) {
  // FNV-1a over the bytes, then mixed into the parent key.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return mix(key ^ mix(h));
}

std::uint64_t Rng::fold(std::uint64_t key, std::uint64_t v) {
  return mix(key ^ mix(v + 0x517cc1b727220a95ull));
}

std::uint64_t Rng::next_u64() { return mix(key_ ^ mix(counter_++)); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; reject u1 == 0.
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  have_cached_normal_ = true;
  return r * std::cos(a);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling to avoid modulo bias.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Rng make_stream(std::string_view experiment_id, std::uint64_t seed,
                std::string_view stream) {
  std::uint64_t k = Rng::fold(0x706861736f72ull, experiment_id);
  k = Rng::fold(k, seed);
  k = Rng::fold(k, stream);
  return Rng(k);
}

}  // namespace phasor
