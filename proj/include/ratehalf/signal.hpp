#pragma once

// Baseband signal primitives: complex samples, constellation points and the
// SNR convention used across the simulator.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace ratehalf {

using ComplexSample = std::complex<double>;

inline double energy(ComplexSample s) noexcept { return std::norm(s); }

// One on-off-keying bit. The mapped amplitude depends on context: sqrt(1-alpha)
// on the helper band in slot 1, unit amplitude for dummy/pre-attack symbols.
struct OokBit {
  int bit = 0;  // 0 or 1
};

// Shared-secret key bit driving the cooperative energy pour on the victim band.
struct KeyBit {
  int bit = 0;
};

// Point of an M-ary PSK constellation: exp(-i*2*pi*index/m), unit energy.
struct PskSymbol {
  int m = 2;
  int index = 0;

  ComplexSample value() const noexcept {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(index) /
                         static_cast<double>(m);
    return {std::cos(phase), -std::sin(phase)};
  }
};

inline ComplexSample psk_point(int m, int index) {
  if (m < 2) throw std::invalid_argument("psk_point: m must be >= 2");
  if (index < 0 || index >= m)
    throw std::invalid_argument("psk_point: index must lie in [0, m)");
  return PskSymbol{m, index}.value();
}

// Noise power under the convention SNR = 1/N with a unit-energy reference
// symbol, i.e. N = 10^(-snr_db/10).
inline double snr_db_to_noise_power(double snr_db) noexcept {
  return std::pow(10.0, -snr_db / 10.0);
}

}  // namespace ratehalf
