#pragma once

// Counter-based random streams for reproducible, parallel Monte Carlo.
//
// A stream is keyed by (master_seed, stream_id). Every Monte Carlo trial gets
// its own stream_id, so results are a pure function of (config, master_seed)
// and independent of how trials are distributed over worker threads.

#include <cstdint>
#include <stdexcept>

#include "ratehalf/signal.hpp"

namespace ratehalf {

namespace detail {

// splitmix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

class RngStream {
 public:
  constexpr RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : state_(detail::mix64(detail::mix64(master_seed ^ 0xA0761D6478BD642FULL) +
                             stream_id)) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return detail::mix64(state_);
  }

  // Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  int bernoulli_half() noexcept { return static_cast<int>(next_u64() >> 63); }

  // Uniform integer in [0, m) without modulo bias.
  std::uint32_t uniform_index(std::uint32_t m) noexcept {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * m) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Circularly-symmetric complex Gaussian CN(0, variance): real and imaginary
// parts are i.i.d. N(0, variance/2). Drawn in polar form, |s|^2 ~ Exp(variance)
// with uniform phase; consumes exactly two 64-bit words per sample.
inline ComplexSample draw_circular_gaussian(RngStream& stream, double variance) {
  if (!(variance >= 0.0))
    throw std::invalid_argument("draw_circular_gaussian: variance must be >= 0");
  const double u = stream.uniform_pos();
  const double phase = 2.0 * std::numbers::pi * stream.uniform();
  const double r = std::sqrt(-variance * std::log(u));
  return {r * std::cos(phase), r * std::sin(phase)};
}

}  // namespace ratehalf
