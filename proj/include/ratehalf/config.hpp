#pragma once

#include <stdexcept>
#include <string>

namespace ratehalf {

// Physical-layer scenario parameters for one Rate-Half experiment point.
//
// Defaults reproduce the reference operating point: 35 dB SNR, a helper with
// a strong side link (sigma_ac2 = 100) and good loop-interference
// cancellation (rho = 1e-3), QPSK, and an energy detector calibrated to a
// 1e-2 false-alarm bound (delta = 0.495).
struct ProtocolConfig {
  double alpha = 0.99885;     // energy division factor, in (0,1)
  int m = 4;                  // PSK order M, >= 2
  double noise_power = 3.1622776601683794e-4;  // N = 10^-3.5 (35 dB)
  double rho = 1e-3;          // loop-interference cancellation, in (0,1)
  double sigma_ac2 = 100.0;   // Alice-Charlie channel variance, > 0
  double delta = 0.495;       // detector energy deviation, in (0,1)

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (!(alpha > 0.0 && alpha < 1.0))
      fail("alpha must lie in (0, 1); got " + std::to_string(alpha));
    if (m < 2) fail("m must be >= 2; got " + std::to_string(m));
    if (!(noise_power > 0.0))
      fail("noise_power must be > 0; got " + std::to_string(noise_power));
    if (!(rho > 0.0 && rho < 1.0))
      fail("rho must lie in (0, 1); got " + std::to_string(rho));
    if (!(sigma_ac2 > 0.0))
      fail("sigma_ac2 must be > 0; got " + std::to_string(sigma_ac2));
    if (!(delta > 0.0 && delta < 1.0))
      fail("delta must lie in (0, 1); got " + std::to_string(delta));
  }
};

}  // namespace ratehalf
