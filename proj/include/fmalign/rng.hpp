#pragma once

#include <array>
#include <cstdint>

namespace fmalign {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The output is a pure function of (key, counter), so any stream position can be
/// reached without generating the preceding values.
class Philox4x32 {
public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  [[nodiscard]] Block operator()(Block counter) const noexcept;

private:
  std::array<std::uint32_t, 2> key_;
};

/// Sequential stream over a Philox key and a fixed 64-bit stream id.
class CounterStream {
public:
  CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept : gen_(seed), stream_(stream) {}

  std::uint64_t next_u64() noexcept;

  /// Uniform integer in [0, bound) by rejection; exact, no floating point.
  std::uint64_t uniform_below(std::uint64_t bound) noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;

  /// Standard normal variate (Box-Muller, one value per call).
  double normal() noexcept;

private:
  Philox4x32 gen_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

/// Mix two integers into one 64-bit stream id (SplitMix64 finalizer).
std::uint64_t mix_stream(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace fmalign
