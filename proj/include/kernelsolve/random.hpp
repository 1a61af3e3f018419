#pragma once

#include <cstdint>
#include <limits>

namespace kernelsolve {

/// SplitMix64: small 64-bit generator with cheap stream splitting.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Independent child stream keyed by `key`; the parent state is untouched.
  SplitMix64 split(std::uint64_t key) const noexcept {
    SplitMix64 mixer(state_ ^ (key * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
    return SplitMix64(mixer());
  }

  /// Uniform double in [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace kernelsolve
