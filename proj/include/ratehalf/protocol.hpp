#pragma once

// Rate-Half frame assembly over the two frequency bands and two time slots.
//
// Helper band f_CB:
//   slot 1: Alice sends her bit from {0, sqrt(1-alpha)}, Charlie masks the
//           energy with a known dummy PSK symbol sqrt(alpha)*z_d.
//   slot 2: Charlie relays: his own symbol z unchanged when he decoded
//           Alice's bit as 1, scaled by sqrt(2-alpha) and rotated by pi/M
//           when he decoded it as 0.
// Victim band f_AB (kept statistically indistinguishable from plain OOK):
//   slot 1: a shared-key bit gates a cooperative pour of sqrt(alpha) from
//           Alice plus sqrt(1-alpha) from Charlie (total unit energy).
//   slot 2: Alice sends a dummy unit-energy OOK bit.

#include <cstddef>
#include <span>
#include <stdexcept>

#include "ratehalf/config.hpp"
#include "ratehalf/decoders.hpp"
#include "ratehalf/rng.hpp"
#include "ratehalf/signal.hpp"

namespace ratehalf {

// Everything needed to replay one two-slot protocol instance.
struct FrameRealization {
  // channels
  ComplexSample h_ab, h_cb, h_ac, h_cc, h_ad, h_cd;
  // noises (Dave sees independent noise per band)
  ComplexSample n_b1, n_b2, n_c1;
  ComplexSample n_d1_fab, n_d2_fab, n_d1_fcb, n_d2_fcb;
  // inputs
  OokBit alice_bit;        // x
  PskSymbol charlie_symbol;  // z
  PskSymbol dummy_psk;     // z_d, key-synchronized and known to Bob
  OokBit dummy_ook;        // x_d
  KeyBit key_bit;
  // Charlie's relay decision
  OokBit charlie_decision;  // x_hat
  // received samples
  ComplexSample y_b1, y_b2, y_c1;
  ComplexSample y_d1_fab, y_d2_fab;
  ComplexSample y_d1_fcb, y_d2_fcb;
};

struct FcbSlot1 {
  ComplexSample y_b1;
  ComplexSample y_c1;
};

// y_B1 = sqrt(1-alpha) h_AB x + sqrt(alpha) h_CB z_d + n_B1
// y_C1 = sqrt(1-alpha) h_AC x + h_CC + n_C1   (h_CC is the residual loop
// interference, drawn with variance alpha*rho)
inline FcbSlot1 fcb_slot1(const ProtocolConfig& cfg, OokBit x, PskSymbol z_d,
                          ComplexSample h_ab, ComplexSample h_cb,
                          ComplexSample h_ac, ComplexSample h_cc,
                          ComplexSample n_b1, ComplexSample n_c1) noexcept {
  const double a_amp = std::sqrt(1.0 - cfg.alpha) * x.bit;
  return {a_amp * h_ab + std::sqrt(cfg.alpha) * h_cb * z_d.value() + n_b1,
          a_amp * h_ac + h_cc + n_c1};
}

// x_hat = 1: y_B2 = h_CB z + n_B2
// x_hat = 0: y_B2 = sqrt(2-alpha) h_CB z e^{i pi/M} + n_B2
inline ComplexSample fcb_slot2(const ProtocolConfig& cfg, OokBit x_hat, PskSymbol z,
                               ComplexSample h_cb, ComplexSample n_b2) noexcept {
  return detail::slot2_mean(h_cb, x_hat.bit, z.index, cfg) + n_b2;
}

// key = 1: sqrt(alpha) h_AD + sqrt(1-alpha) h_CD + n; key = 0: n.
inline ComplexSample fab_slot1(const ProtocolConfig& cfg, KeyBit key,
                               ComplexSample h_ad, ComplexSample h_cd,
                               ComplexSample n_d1) noexcept {
  if (key.bit == 0) return n_d1;
  return std::sqrt(cfg.alpha) * h_ad + std::sqrt(1.0 - cfg.alpha) * h_cd + n_d1;
}

// Dummy unit-energy OOK from Alice: h_AD x_d + n.
inline ComplexSample fab_slot2(const ProtocolConfig& /*cfg*/, OokBit x_d,
                               ComplexSample h_ad, ComplexSample n_d2) noexcept {
  return static_cast<double>(x_d.bit) * h_ad + n_d2;
}

// Draws one frame. The draw order below is a determinism contract: changing
// it changes every seeded result.
//   channels h_AB, h_CB, h_AC, h_CC, h_AD, h_CD;
//   noises n_B1, n_B2, n_C1, n_D1^fab, n_D2^fab, n_D1^fcb, n_D2^fcb;
//   bits x, x_d, key; symbol indices z, z_d.
inline FrameRealization draw_frame(const ProtocolConfig& cfg, RngStream& stream) {
  FrameRealization f;
  f.h_ab = draw_circular_gaussian(stream, 1.0);
  f.h_cb = draw_circular_gaussian(stream, 1.0);
  f.h_ac = draw_circular_gaussian(stream, cfg.sigma_ac2);
  f.h_cc = draw_circular_gaussian(stream, cfg.alpha * cfg.rho);
  f.h_ad = draw_circular_gaussian(stream, 1.0);
  f.h_cd = draw_circular_gaussian(stream, 1.0);

  const double n = cfg.noise_power;
  f.n_b1 = draw_circular_gaussian(stream, n);
  f.n_b2 = draw_circular_gaussian(stream, n);
  f.n_c1 = draw_circular_gaussian(stream, n);
  f.n_d1_fab = draw_circular_gaussian(stream, n);
  f.n_d2_fab = draw_circular_gaussian(stream, n);
  f.n_d1_fcb = draw_circular_gaussian(stream, n);
  f.n_d2_fcb = draw_circular_gaussian(stream, n);

  f.alice_bit = OokBit{stream.bernoulli_half()};
  f.dummy_ook = OokBit{stream.bernoulli_half()};
  f.key_bit = KeyBit{stream.bernoulli_half()};
  f.charlie_symbol = PskSymbol{cfg.m, static_cast<int>(stream.uniform_index(
                                          static_cast<std::uint32_t>(cfg.m)))};
  f.dummy_psk = PskSymbol{cfg.m, static_cast<int>(stream.uniform_index(
                                     static_cast<std::uint32_t>(cfg.m)))};

  const FcbSlot1 s1 = fcb_slot1(cfg, f.alice_bit, f.dummy_psk, f.h_ab, f.h_cb,
                                f.h_ac, f.h_cc, f.n_b1, f.n_c1);
  f.y_b1 = s1.y_b1;
  f.y_c1 = s1.y_c1;
  f.charlie_decision = charlie_detect(f.y_c1, cfg);
  f.y_b2 = fcb_slot2(cfg, f.charlie_decision, f.charlie_symbol, f.h_cb, f.n_b2);

  f.y_d1_fab = fab_slot1(cfg, f.key_bit, f.h_ad, f.h_cd, f.n_d1_fab);
  f.y_d2_fab = fab_slot2(cfg, f.dummy_ook, f.h_ad, f.n_d2_fab);

  // Dave's f_CB receptions: slot 1 mirrors Bob's equation through the
  // Alice-Dave / Charlie-Dave channels, slot 2 mirrors Charlie's relay rule.
  const double a_amp = std::sqrt(1.0 - cfg.alpha) * f.alice_bit.bit;
  f.y_d1_fcb =
      a_amp * f.h_ad + std::sqrt(cfg.alpha) * f.h_cd * f.dummy_psk.value() + f.n_d1_fcb;
  f.y_d2_fcb = detail::slot2_mean(f.h_cd, f.charlie_decision.bit,
                                  f.charlie_symbol.index, cfg) +
               f.n_d2_fcb;
  return f;
}

// Pre-attack observation on the victim band: unit-energy OOK through a fresh
// Rayleigh channel. Used as the "before" reference for distribution checks.
inline ComplexSample draw_preattack_fab(const ProtocolConfig& cfg, RngStream& stream) {
  const ComplexSample h = draw_circular_gaussian(stream, 1.0);
  const ComplexSample noise = draw_circular_gaussian(stream, cfg.noise_power);
  const int x = stream.bernoulli_half();
  return static_cast<double>(x) * h + noise;
}

// Pre-attack observation on the helper band at Dave: unit-energy M-PSK.
inline ComplexSample draw_preattack_fcb(const ProtocolConfig& cfg, RngStream& stream) {
  const ComplexSample h = draw_circular_gaussian(stream, 1.0);
  const ComplexSample noise = draw_circular_gaussian(stream, cfg.noise_power);
  const PskSymbol z{cfg.m, static_cast<int>(stream.uniform_index(
                               static_cast<std::uint32_t>(cfg.m)))};
  return h * z.value() + noise;
}

// Per-slot average transmit energies of one frame, from the transmitted
// amplitudes (never the received samples).
struct TransmitEnergies {
  double fab = 0.0;
  double fcb = 0.0;
  double alice = 0.0;
  double charlie = 0.0;
};

inline TransmitEnergies transmit_energies(const ProtocolConfig& cfg, OokBit x,
                                          OokBit x_hat, KeyBit key,
                                          OokBit x_d) noexcept {
  const double a = cfg.alpha;
  const double alice_fcb1 = (1.0 - a) * x.bit;
  const double charlie_fcb1 = a;
  const double charlie_fcb2 = x_hat.bit == 1 ? 1.0 : 2.0 - a;
  const double alice_fab1 = a * key.bit;
  const double charlie_fab1 = (1.0 - a) * key.bit;
  const double alice_fab2 = x_d.bit;
  TransmitEnergies e;
  e.fab = (alice_fab1 + charlie_fab1 + alice_fab2) / 2.0;
  e.fcb = (alice_fcb1 + charlie_fcb1 + charlie_fcb2) / 2.0;
  e.alice = (alice_fcb1 + alice_fab1 + alice_fab2) / 2.0;
  e.charlie = (charlie_fcb1 + charlie_fcb2 + charlie_fab1) / 2.0;
  return e;
}

struct EnergyAudit {
  double fab = 0.0;
  double fcb = 0.0;
  double alice = 0.0;
  double charlie = 0.0;
  std::size_t frames = 0;
};

inline EnergyAudit energy_audit(const ProtocolConfig& cfg,
                                std::span<const FrameRealization> frames) {
  if (frames.empty())
    throw std::invalid_argument("energy_audit: frame list must not be empty");
  EnergyAudit audit;
  for (const FrameRealization& f : frames) {
    const TransmitEnergies e = transmit_energies(cfg, f.alice_bit, f.charlie_decision,
                                                 f.key_bit, f.dummy_ook);
    audit.fab += e.fab;
    audit.fcb += e.fcb;
    audit.alice += e.alice;
    audit.charlie += e.charlie;
  }
  const double n = static_cast<double>(frames.size());
  audit.fab /= n;
  audit.fcb /= n;
  audit.alice /= n;
  audit.charlie /= n;
  audit.frames = frames.size();
  return audit;
}

}  // namespace ratehalf
