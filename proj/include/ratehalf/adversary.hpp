#pragma once

// Dave's two countermeasure detectors.
//
// Short-term: an instantaneous energy detector on the helper band. Dave
// normalizes his reception by |h_CD| and alarms whenever the energy leaves
// [1-delta, 1+delta]. Closed-form upper bounds exist for the false-alarm
// probability (three-term expression in delta and N) and, when
// 1-delta < alpha, for the detection probability of the countermeasure.
//
// Long-term: a k-nearest-neighbour Kullback-Leibler divergence estimate
// between his observations before and after the attack, treating complex
// samples as points in the plane.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include "ratehalf/config.hpp"
#include "ratehalf/decoders.hpp"
#include "ratehalf/errors.hpp"
#include "ratehalf/kdtree.hpp"
#include "ratehalf/protocol.hpp"
#include "ratehalf/signal.hpp"

namespace ratehalf {

struct DetectorVerdict {
  bool alarm = false;
  int slot = 1;  // 1 or 2
  double normalized_energy = 0.0;
};

inline DetectorVerdict energy_detect(ComplexSample y_prime, double delta,
                                     int slot = 1) noexcept {
  const double e = energy(y_prime);
  return {e > 1.0 + delta || e < 1.0 - delta, slot, e};
}

// Upper bound on the average false-alarm probability of the energy detector
// when no countermeasure runs (Rayleigh-averaged three-term form).
inline double pfa_bound(double delta, double noise_power) noexcept {
  const auto term = [noise_power](double c) {
    return 1.0 / (1.0 + c * c / noise_power);
  };
  return term(std::sqrt(1.0 + delta) - 1.0) + term(1.0 - std::sqrt(1.0 - delta)) -
         term(std::sqrt(1.0 - delta) + 1.0);
}

// Smallest delta whose false-alarm bound does not exceed target_pfa, located
// by bisection to 1e-6. The bound is strictly decreasing in delta (each term
// is; asserted while bracketing), so the minimizer is well defined.
inline double calibrate_delta(double noise_power, double target_pfa) {
  if (!(target_pfa > 0.0))
    throw std::invalid_argument("calibrate_delta: target_pfa must be > 0");
  constexpr double kEps = 1e-9;
  double lo = kEps, hi = 1.0 - kEps;
  const double at_lo = pfa_bound(lo, noise_power);
  const double at_hi = pfa_bound(hi, noise_power);
  if (at_hi > at_lo)
    throw std::logic_error("calibrate_delta: pfa_bound is not decreasing");
  if (at_hi > target_pfa)
    throw NumericError("calibrate_delta: no delta < 1 reaches target_pfa " +
                       std::to_string(target_pfa) + " (bound range [" +
                       std::to_string(at_hi) + ", " + std::to_string(at_lo) + "])");
  if (at_lo <= target_pfa) return lo;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (pfa_bound(mid, noise_power) <= target_pfa)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// Closed-form upper bound on the average detection probability of the
// Rate-Half countermeasure, valid for 1-delta < alpha. Slot-1 terms average
// over Alice's bit, slot-2 terms over Charlie's decision via the crossover
// marginals; the relayed-as-1 slot looks exactly like a pre-attack PSK symbol,
// so its term equals the false-alarm bound.
inline double pd_bound(const ProtocolConfig& cfg, const CrossoverMatrix& crossovers) {
  const double alpha = cfg.alpha, delta = cfg.delta, n = cfg.noise_power;
  if (!(1.0 - delta < alpha))
    throw std::invalid_argument("pd_bound: requires 1 - delta < alpha");
  const double sqa = std::sqrt(alpha);
  const double sq2a = std::sqrt(2.0 - alpha);
  const double sq_hi = std::sqrt(1.0 + delta);
  const double sq_lo = std::sqrt(1.0 - delta);
  const double j1 = (sq_hi - sqa) * (sq_hi - sqa);
  const double j2 = (sqa - sq_lo) * (sqa - sq_lo);
  const double j3 = (sq_lo + sqa) * (sq_lo + sqa);
  const double j4 = (sq_hi - sq2a) * (sq_hi - sq2a);
  const double j5 = (sq2a - sq_lo) * (sq2a - sq_lo);
  const double j6 = (sq_lo + sq2a) * (sq_lo + sq2a);
  const double n0b = n;
  const double n1b = n + 1.0 - alpha;
  const auto three_term = [](double a, double b, double c, double nb) {
    return 1.0 / (1.0 + a / nb) + 1.0 / (1.0 + b / nb) - 1.0 / (1.0 + c / nb);
  };
  const double pd10 = three_term(j1, j2, j3, n0b);
  const double pd11 = three_term(j1, j2, j3, n1b);
  const double pd20 = three_term(j4, j5, j6, n0b);
  const double pd21 = pfa_bound(delta, n);
  const auto& p = crossovers.p;
  return 0.5 * (pd10 + pd11 + (p[0][0] + p[1][0]) * pd20 +
                (p[1][1] + p[0][1]) * pd21);
}

struct DaveFcbObservation {
  ComplexSample y1_prime;
  ComplexSample y2_prime;
};

// Channel-magnitude-normalized f_CB receptions for the energy detector.
// Returns nothing when |h_CD| is too small to normalize against; such frames
// are skipped in detector statistics.
inline std::optional<DaveFcbObservation> dave_observe_fcb(
    const FrameRealization& frame, const ProtocolConfig& /*cfg*/) {
  const double mag = std::abs(frame.h_cd);
  if (mag < 1e-12) return std::nullopt;
  return DaveFcbObservation{frame.y_d1_fcb / mag, frame.y_d2_fcb / mag};
}

struct KldEstimate {
  double value = 0.0;  // nats; finite-sample estimates may be slightly negative
  int k = 1;
  std::size_t n_before = 0;
  std::size_t n_after = 0;
  std::size_t zero_distance_fixups = 0;
};

// k-NN divergence estimate of D(P_before || P_after) for 2-D (complex)
// samples:
//   D = (2/n) * sum_i log(nu_k(i) / rho_k(i)) + log(m / (n-1))
// where rho_k(i) is the k-th NN distance of before[i] inside `before` (self
// excluded) and nu_k(i) its k-th NN distance into `after`. Coincident points
// would give zero distances; those are floored at 1e-12 and counted.
inline KldEstimate knn_kld(std::span<const ComplexSample> before,
                           std::span<const ComplexSample> after, int k = 1) {
  if (k < 1) throw std::invalid_argument("knn_kld: k must be >= 1");
  const std::size_t n = before.size(), m = after.size();
  if (n < static_cast<std::size_t>(k) + 1 || m < static_cast<std::size_t>(k) + 1)
    throw std::invalid_argument("knn_kld: need at least k+1 samples on each side");

  const detail::KdTree2D tree_before(before);
  const detail::KdTree2D tree_after(after);

  constexpr double kFloor = 1e-12;
  double log_sum = 0.0;
  std::size_t fixups = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double rho = tree_before.kth_nn_distance(before[i], k,
                                             static_cast<std::int64_t>(i));
    double nu = tree_after.kth_nn_distance(before[i], k);
    if (rho < kFloor) { rho = kFloor; ++fixups; }
    if (nu < kFloor) { nu = kFloor; ++fixups; }
    log_sum += std::log(nu / rho);
  }
  KldEstimate est;
  est.value = (2.0 / static_cast<double>(n)) * log_sum +
              std::log(static_cast<double>(m) / static_cast<double>(n - 1));
  est.k = k;
  est.n_before = n;
  est.n_after = m;
  est.zero_distance_fixups = fixups;
  return est;
}

}  // namespace ratehalf
