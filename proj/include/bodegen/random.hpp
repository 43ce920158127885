#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bodegen {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Combines a base seed with a list of stream tags into a new seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

/// Named stream tags, so every consumer of randomness draws from its own stream.
namespace stream {
inline constexpr std::uint64_t kProjection = 0x70726f6aULL;  // "proj"
inline constexpr std::uint64_t kInit = 0x696e6974ULL;        // "init"
inline constexpr std::uint64_t kCandidates = 0x63616e64ULL;  // "cand"
inline constexpr std::uint64_t kFit = 0x66697400ULL;         // "fit"
inline constexpr std::uint64_t kTarget = 0x74617267ULL;      // "targ"
}  // namespace stream

/// Reproducible random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard. The conversions to real numbers are
/// implemented here (not with <random> distributions, which are
/// implementation-defined) so streams are identical across standard libraries:
///   uniform01: ((word >> 11) + 0.5) * 2^-53, always in the open interval (0, 1)
///   normal:    Box-Muller on two uniform01 draws; the sine branch is cached
///              and returned by the next call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53; }
  double uniform(double lower, double upper) { return lower + (upper - lower) * uniform01(); }
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bodegen
