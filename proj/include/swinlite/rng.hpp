#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace swinlite {

/// Deterministic random stream: std::mt19937_64 seeded through std::seed_seq
/// from a key of 64-bit words.
///
/// Both the engine and std::seed_seq are fully specified by the C++ standard,
/// so streams are reproducible across platforms. The std distributions are
/// not, which is why the conversions below are written out.
class Rng {
 public:
  Rng(std::initializer_list<std::uint64_t> key);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal();
  /// Normal(0, stddev) rejected outside ±bound·stddev.
  double truncated_normal(double stddev, double bound = 2.0);

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Stream tags used to derive independent keys from one user seed.
enum class Stream : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kAugment = 3,
  kEmblem = 4,
  kDistort = 5,
  kSplit = 6,
  kGradCheck = 7,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace swinlite
