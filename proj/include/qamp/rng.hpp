#pragma once

// Deterministic, platform-independent randomness. Every consumer derives its
// own stream from (master seed, purpose string [, index]), so adding a new
// consumer never shifts the draws seen by existing ones.

#include <cstdint>
#include <cmath>
#include <string_view>

namespace qamp {

// splitmix64 output function (Steele, Lea, Flood).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  std::uint64_t r = splitmix64_next(s);
  return r ^ splitmix64_next(s);
}

// FNV-1a over the purpose string, then mixed with the master seed.
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view purpose) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix_seed(master, h);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index) {
  return mix_seed(stream_seed(master, purpose), index);
}

// Small counter-based generator. std::mt19937_64 would also be deterministic,
// but the std distributions on top of it are implementation-defined; this
// engine plus the explicit conversions below pin the exact draw sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // uniform on [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1]
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; draws come out in pairs
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_double_open();
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qamp
