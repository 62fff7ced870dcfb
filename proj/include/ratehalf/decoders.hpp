#pragma once

// Charlie's relay bit decision and Bob's joint decoders.
//
// Charlie recovers Alice's bit non-coherently from the slot-1 energy: under
// Rayleigh fading |y_C1|^2 is exponential with mean sigma0sq = alpha*rho + N
// (bit 0) or sigma1sq = (1-alpha)*sigma_ac2 + sigma0sq (bit 1), and the
// maximum-likelihood rule is an energy threshold with closed-form crossover
// probabilities.
//
// Bob decodes (a, b) jointly from the dummy-cleaned slot-1 sample and the
// slot-2 sample. The exact decoder (jmap) mixes the two slot-2 hypotheses with
// Charlie's crossover probabilities; the dominant-term decoder (rhjdd) keeps
// only the error-free relay term.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ratehalf/config.hpp"
#include "ratehalf/signal.hpp"

namespace ratehalf {

// p[m][n] = probability that Charlie decodes Alice's bit m as bit n.
struct CrossoverMatrix {
  std::array<std::array<double, 2>, 2> p{};
};

inline CrossoverMatrix identity_crossover() noexcept {
  CrossoverMatrix c;
  c.p[0][0] = c.p[1][1] = 1.0;
  return c;
}

struct JointDecision {
  int a_hat = 0;  // Alice's bit
  int b_hat = 0;  // index of Charlie's PSK symbol
};

inline double charlie_sigma0_sq(const ProtocolConfig& cfg) noexcept {
  return cfg.alpha * cfg.rho + cfg.noise_power;
}

inline double charlie_sigma1_sq(const ProtocolConfig& cfg) noexcept {
  return (1.0 - cfg.alpha) * cfg.sigma_ac2 + charlie_sigma0_sq(cfg);
}

// ML energy threshold between Exp(sigma0sq) and Exp(sigma1sq).
inline double charlie_threshold(const ProtocolConfig& cfg) {
  const double s0 = charlie_sigma0_sq(cfg);
  const double s1 = charlie_sigma1_sq(cfg);
  if (!(s1 > s0))
    throw std::domain_error("charlie_threshold: degenerate detection, "
                            "sigma1^2 must exceed sigma0^2");
  return s0 * s1 / (s1 - s0) * std::log(s1 / s0);
}

inline OokBit charlie_detect(ComplexSample y_c1, const ProtocolConfig& cfg) {
  return OokBit{energy(y_c1) > charlie_threshold(cfg) ? 1 : 0};
}

// Closed form under Rayleigh fading:
//   P01 = exp(-tau/sigma0sq),  P10 = 1 - exp(-tau/sigma1sq).
inline CrossoverMatrix crossover_matrix(const ProtocolConfig& cfg) {
  const double tau = charlie_threshold(cfg);
  const double p01 = std::exp(-tau / charlie_sigma0_sq(cfg));
  const double p10 = 1.0 - std::exp(-tau / charlie_sigma1_sq(cfg));
  CrossoverMatrix c;
  c.p[0][0] = 1.0 - p01;
  c.p[0][1] = p01;
  c.p[1][0] = p10;
  c.p[1][1] = 1.0 - p10;
  return c;
}

// Strip the known dummy component from Bob's slot-1 sample.
inline ComplexSample remove_dummy(ComplexSample y_b1, ComplexSample h_cb,
                                  PskSymbol z_d, const ProtocolConfig& cfg) noexcept {
  return y_b1 - std::sqrt(cfg.alpha) * h_cb * z_d.value();
}

namespace detail {

// Slot-1 log density with h_AB marginalized out: given x = a the cleaned
// sample is CN(0, (1-alpha)*a + N).
inline double slot1_loglik(double energy_tilde, int a, const ProtocolConfig& cfg) noexcept {
  const double v = (a == 1 ? 1.0 - cfg.alpha : 0.0) + cfg.noise_power;
  return -std::log(std::numbers::pi * v) - energy_tilde / v;
}

// Slot-2 mean under Charlie's transmission rule for decision x_hat.
inline ComplexSample slot2_mean(ComplexSample h_cb, int x_hat, int b,
                                const ProtocolConfig& cfg) noexcept {
  const ComplexSample zb = PskSymbol{cfg.m, b}.value();
  if (x_hat == 1) return h_cb * zb;
  const double ph = std::numbers::pi / static_cast<double>(cfg.m);
  return std::sqrt(2.0 - cfg.alpha) * h_cb * zb * ComplexSample{std::cos(ph), std::sin(ph)};
}

inline double slot2_loglik(ComplexSample y_b2, ComplexSample h_cb, int x_hat,
                           int b, const ProtocolConfig& cfg) noexcept {
  const double n = cfg.noise_power;
  return -std::log(std::numbers::pi * n) -
         std::norm(y_b2 - slot2_mean(h_cb, x_hat, b, cfg)) / n;
}

inline double log_sum_exp(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = a > b ? a : b;
  return hi + std::log1p(std::exp(-(std::abs(a - b))));
}

}  // namespace detail

// Rate-Half joint dominant decoder: argmax over (a, b) of the likelihood with
// Charlie's error events dropped (x_hat taken equal to a). Ties resolve to the
// lexicographically smallest (a, b).
inline JointDecision rhjdd(ComplexSample y_tilde_b1, ComplexSample y_b2,
                           ComplexSample h_cb, const ProtocolConfig& cfg) {
  const double e1 = energy(y_tilde_b1);
  JointDecision best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a) {
    const double s1 = detail::slot1_loglik(e1, a, cfg);
    for (int b = 0; b < cfg.m; ++b) {
      const double score = s1 + detail::slot2_loglik(y_b2, h_cb, a, b, cfg);
      if (score > best_score) {
        best_score = score;
        best = {a, b};
      }
    }
  }
  return best;
}

// Exact joint MAP decoder: the slot-2 density is a two-component mixture over
// Charlie's decision, weighted by the crossover probabilities. Same tie-break
// as rhjdd; with an identity crossover matrix the two decoders coincide.
inline JointDecision jmap(ComplexSample y_tilde_b1, ComplexSample y_b2,
                          ComplexSample h_cb, const ProtocolConfig& cfg,
                          const CrossoverMatrix& crossovers) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const double e1 = energy(y_tilde_b1);
  JointDecision best;
  double best_score = kNegInf;
  for (int a = 0; a < 2; ++a) {
    const double s1 = detail::slot1_loglik(e1, a, cfg);
    const double lw0 = crossovers.p[a][0] > 0.0 ? std::log(crossovers.p[a][0]) : kNegInf;
    const double lw1 = crossovers.p[a][1] > 0.0 ? std::log(crossovers.p[a][1]) : kNegInf;
    for (int b = 0; b < cfg.m; ++b) {
      const double mix = detail::log_sum_exp(
          lw0 + detail::slot2_loglik(y_b2, h_cb, 0, b, cfg),
          lw1 + detail::slot2_loglik(y_b2, h_cb, 1, b, cfg));
      const double score = s1 + mix;
      if (score > best_score) {
        best_score = score;
        best = {a, b};
      }
    }
  }
  return best;
}

}  // namespace ratehalf
