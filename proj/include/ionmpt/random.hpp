#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string>
#include <string_view>

namespace ionmpt {

// Stable 64-bit FNV-1a over the label bytes. Used together with splitmix64
// to derive independent stream seeds from a master seed; both functions are
// fully specified, so seed derivation is identical on every platform.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(master ^ fnv1a64(label));
}

// Draws on top of mt19937_64 built only from the raw 64-bit output, because
// std::uniform_real_distribution and friends are implementation-defined and
// would break bit-for-bit reproducibility across standard libraries.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  // uniform in [0,1) with 53 random mantissa bits
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // uniform over {0, ..., n-1}
  int uniform_index(int n) {
    int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

  // standard normal via Box-Muller (pair cached)
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0,1], keeps the log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t raw() { return eng_(); }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// The four independent randomness sources of one trajectory. Keeping them
// separate means that, e.g., turning crosstalk on or off does not shift the
// gate angles or measurement locations of the run.
struct TrajectoryStreams {
  RandomStream angles;
  RandomStream locations;
  RandomStream outcomes;
  RandomStream crosstalk;

  static TrajectoryStreams from_seed(std::uint64_t seed) {
    return TrajectoryStreams{
        RandomStream(derive_seed(seed, "angles")),
        RandomStream(derive_seed(seed, "locations")),
        RandomStream(derive_seed(seed, "outcomes")),
        RandomStream(derive_seed(seed, "crosstalk")),
    };
  }
};

}  // namespace ionmpt
