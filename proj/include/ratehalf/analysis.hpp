#pragma once

// Monte Carlo estimation of Bob's joint error rate and Dave's detection rate
// as functions of alpha, plus the intersection search for the near-optimal
// energy division factor.
//
// Parallelism contract: trials are split into fixed-size chunks; each trial
// derives its own counter-based stream from (master_seed, stream id), chunk
// results are reduced in chunk order. Output is therefore bit-identical for
// any worker count.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "ratehalf/adversary.hpp"
#include "ratehalf/config.hpp"
#include "ratehalf/decoders.hpp"
#include "ratehalf/errors.hpp"
#include "ratehalf/protocol.hpp"
#include "ratehalf/rng.hpp"

namespace ratehalf {

// Disjoint stream-id spaces so different sample populations never share draws.
namespace stream_domain {
inline constexpr std::uint64_t kFrames = 0;
inline constexpr std::uint64_t kPreattackFab = 1ULL << 56;
inline constexpr std::uint64_t kPreattackFcb = 2ULL << 56;
inline constexpr std::uint64_t kKldFrames = 3ULL << 56;
inline constexpr std::uint64_t kFalseAlarm = 4ULL << 56;
}  // namespace stream_domain

namespace detail {

inline unsigned resolve_workers(unsigned workers) {
  if (workers != 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(trial_index, acc) for every trial, accumulating into per-chunk
// accumulators that are merged in chunk order.
template <typename Acc, typename Fn>
Acc chunked_reduce(std::uint64_t trials, unsigned workers, Fn&& fn) {
  constexpr std::uint64_t kChunk = 8192;
  const std::uint64_t n_chunks = (trials + kChunk - 1) / kChunk;
  std::vector<Acc> chunk_accs(static_cast<std::size_t>(n_chunks));

  auto run_chunk = [&](std::uint64_t c) {
    Acc& acc = chunk_accs[static_cast<std::size_t>(c)];
    const std::uint64_t begin = c * kChunk;
    const std::uint64_t end = std::min(begin + kChunk, trials);
    for (std::uint64_t t = begin; t < end; ++t) fn(t, acc);
  };

  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(workers), n_chunks));
  if (n_workers <= 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::uint64_t c = next.fetch_add(1); c < n_chunks;
             c = next.fetch_add(1))
          run_chunk(c);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  Acc total;
  for (const Acc& acc : chunk_accs) total.merge(acc);
  return total;
}

}  // namespace detail

struct RateEstimate {
  double rate = 0.0;
  double halfwidth95 = 0.0;  // normal-approximation binomial half-width
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
};

namespace detail {

inline RateEstimate to_rate_estimate(std::uint64_t hits, std::uint64_t trials) {
  RateEstimate est;
  est.hits = hits;
  est.trials = trials;
  if (trials > 0) {
    const double p = static_cast<double>(hits) / static_cast<double>(trials);
    est.rate = p;
    est.halfwidth95 = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
  return est;
}

struct CountAcc {
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  void merge(const CountAcc& o) { hits += o.hits; total += o.total; }
};

}  // namespace detail

struct ErrorBreakdown {
  RateEstimate joint;        // (a_hat, b_hat) != (x, z-index)
  double alice_bit = 0.0;    // a_hat != x
  double charlie_symbol = 0.0;  // b_hat != z-index
};

// Error rates of the dominant decoder: the joint pair plus per-user
// diagnostics.
inline ErrorBreakdown mc_error_breakdown(const ProtocolConfig& cfg,
                                         std::uint64_t trials,
                                         std::uint64_t master_seed,
                                         unsigned workers = 1) {
  cfg.validate();
  struct Acc {
    std::uint64_t joint = 0, alice = 0, charlie = 0, total = 0;
    void merge(const Acc& o) {
      joint += o.joint;
      alice += o.alice;
      charlie += o.charlie;
      total += o.total;
    }
  };
  const Acc acc = detail::chunked_reduce<Acc>(
      trials, workers, [&cfg, master_seed](std::uint64_t t, Acc& a) {
        RngStream stream(master_seed, stream_domain::kFrames + t);
        const FrameRealization f = draw_frame(cfg, stream);
        const ComplexSample y_tilde =
            remove_dummy(f.y_b1, f.h_cb, f.dummy_psk, cfg);
        const JointDecision d = rhjdd(y_tilde, f.y_b2, f.h_cb, cfg);
        const bool alice_err = d.a_hat != f.alice_bit.bit;
        const bool charlie_err = d.b_hat != f.charlie_symbol.index;
        a.joint += (alice_err || charlie_err);
        a.alice += alice_err;
        a.charlie += charlie_err;
        a.total += 1;
      });
  ErrorBreakdown out;
  out.joint = detail::to_rate_estimate(acc.joint, acc.total);
  if (acc.total > 0) {
    out.alice_bit = static_cast<double>(acc.alice) / static_cast<double>(acc.total);
    out.charlie_symbol =
        static_cast<double>(acc.charlie) / static_cast<double>(acc.total);
  }
  return out;
}

// Fraction of frames where the dominant decoder misses the joint pair
// (Alice's bit, Charlie's symbol index).
inline RateEstimate mc_error_rate(const ProtocolConfig& cfg, std::uint64_t trials,
                                  std::uint64_t master_seed, unsigned workers = 1) {
  return mc_error_breakdown(cfg, trials, master_seed, workers).joint;
}

// Fraction of frames where Dave's energy detector alarms in either slot on
// the helper band. Frames with a vanishing |h_CD| are skipped.
inline RateEstimate mc_detection_rate(const ProtocolConfig& cfg, std::uint64_t trials,
                                      std::uint64_t master_seed, unsigned workers = 1) {
  cfg.validate();
  const auto acc = detail::chunked_reduce<detail::CountAcc>(
      trials, workers, [&cfg, master_seed](std::uint64_t t, detail::CountAcc& a) {
        RngStream stream(master_seed, stream_domain::kFrames + t);
        const FrameRealization f = draw_frame(cfg, stream);
        const auto obs = dave_observe_fcb(f, cfg);
        if (!obs) return;
        a.hits += (energy_detect(obs->y1_prime, cfg.delta, 1).alarm ||
                   energy_detect(obs->y2_prime, cfg.delta, 2).alarm);
        a.total += 1;
      });
  return detail::to_rate_estimate(acc.hits, acc.total);
}

// Per-observation false-alarm rate of the energy detector on pre-attack
// helper-band symbols (one normalized PSK symbol per trial).
inline RateEstimate mc_false_alarm_rate(const ProtocolConfig& cfg, std::uint64_t trials,
                                        std::uint64_t master_seed,
                                        unsigned workers = 1) {
  cfg.validate();
  const auto acc = detail::chunked_reduce<detail::CountAcc>(
      trials, workers, [&cfg, master_seed](std::uint64_t t, detail::CountAcc& a) {
        RngStream stream(master_seed, stream_domain::kFalseAlarm + t);
        const ComplexSample h = draw_circular_gaussian(stream, 1.0);
        const ComplexSample noise = draw_circular_gaussian(stream, cfg.noise_power);
        const PskSymbol z{cfg.m, static_cast<int>(stream.uniform_index(
                                     static_cast<std::uint32_t>(cfg.m)))};
        const double mag = std::abs(h);
        if (mag < 1e-12) return;
        a.hits += energy_detect((h * z.value() + noise) / mag, cfg.delta).alarm;
        a.total += 1;
      });
  return detail::to_rate_estimate(acc.hits, acc.total);
}

// Streaming transmit-energy audit over freshly drawn frames (same streams as
// mc_error_rate, so one seed describes one reproducible population).
inline EnergyAudit mc_energy_audit(const ProtocolConfig& cfg, std::uint64_t trials,
                                   std::uint64_t master_seed, unsigned workers = 1) {
  cfg.validate();
  if (trials == 0)
    throw std::invalid_argument("mc_energy_audit: trials must be > 0");
  struct Acc {
    double fab = 0.0, fcb = 0.0, alice = 0.0, charlie = 0.0;
    std::uint64_t n = 0;
    void merge(const Acc& o) {
      fab += o.fab; fcb += o.fcb; alice += o.alice; charlie += o.charlie; n += o.n;
    }
  };
  const Acc acc = detail::chunked_reduce<Acc>(
      trials, workers, [&cfg, master_seed](std::uint64_t t, Acc& a) {
        RngStream stream(master_seed, stream_domain::kFrames + t);
        const FrameRealization f = draw_frame(cfg, stream);
        const TransmitEnergies e = transmit_energies(
            cfg, f.alice_bit, f.charlie_decision, f.key_bit, f.dummy_ook);
        a.fab += e.fab; a.fcb += e.fcb; a.alice += e.alice; a.charlie += e.charlie;
        a.n += 1;
      });
  EnergyAudit audit;
  const double n = static_cast<double>(acc.n);
  audit.fab = acc.fab / n;
  audit.fcb = acc.fcb / n;
  audit.alice = acc.alice / n;
  audit.charlie = acc.charlie / n;
  audit.frames = static_cast<std::size_t>(acc.n);
  return audit;
}

// Bracketed root finder on [lo, hi], requiring a sign change. Secant steps
// alternate with plain bisection so a one-sided (false-position) stall cannot
// keep the bracket from shrinking; terminates once it is narrower than tol.
inline double find_root(const std::function<double(double)>& g, double lo,
                        double hi, double tol, int max_iter = 200) {
  double g_lo = g(lo), g_hi = g(hi);
  if (g_lo == 0.0) return lo;
  if (g_hi == 0.0) return hi;
  if (std::signbit(g_lo) == std::signbit(g_hi))
    throw NumericError("find_root: no sign change on [" + std::to_string(lo) +
                       ", " + std::to_string(hi) + "]");
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    double cand = 0.5 * (lo + hi);
    if (it % 2 == 0) {
      const double secant = hi - g_hi * (hi - lo) / (g_hi - g_lo);
      if (std::isfinite(secant) && secant > lo && secant < hi) cand = secant;
    }
    const double g_cand = g(cand);
    if (g_cand == 0.0) return cand;
    if (std::signbit(g_cand) == std::signbit(g_lo)) {
      lo = cand;
      g_lo = g_cand;
    } else {
      hi = cand;
      g_hi = g_cand;
    }
  }
  return 0.5 * (lo + hi);
}

enum class DetectionSide { kBound, kMonteCarlo };

// Near-optimal energy division factor: the root of
//   g(alpha) = P_UE(alpha) - P_UD(alpha)
// on (1-delta, 1). P_UE is always Monte Carlo (common random numbers across
// alpha evaluations); P_UD defaults to the smooth closed-form bound.
inline double find_alpha_star(const ProtocolConfig& cfg_template, std::uint64_t trials,
                              double tol, std::uint64_t master_seed,
                              DetectionSide side = DetectionSide::kBound,
                              unsigned workers = 1) {
  constexpr double kEdge = 1e-4;
  const double lo = 1.0 - cfg_template.delta + kEdge;
  const double hi = 1.0 - kEdge;
  auto g = [&](double alpha) {
    ProtocolConfig cfg = cfg_template;
    cfg.alpha = alpha;
    const double p_ue = mc_error_rate(cfg, trials, master_seed, workers).rate;
    const double p_ud = side == DetectionSide::kBound
                            ? pd_bound(cfg, crossover_matrix(cfg))
                            : mc_detection_rate(cfg, trials, master_seed, workers).rate;
    return p_ue - p_ud;
  };
  return find_root(g, lo, hi, tol);
}

struct SweepResult {
  std::vector<double> alphas;
  std::vector<double> p_ue;
  std::vector<double> p_ue_halfwidth;
  std::vector<double> p_ud_bound;  // NaN where alpha <= 1-delta
  std::vector<double> p_ud_mc;
  std::vector<double> p_ud_mc_halfwidth;
  std::vector<double> p_sum;  // p_ue + p_ud_bound
  double alpha_star = std::numeric_limits<double>::quiet_NaN();
  double alpha_min_sum = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t trials_per_point = 0;
};

inline SweepResult sweep_alpha(const ProtocolConfig& cfg_template,
                               const std::vector<double>& alpha_grid,
                               std::uint64_t trials, std::uint64_t master_seed,
                               unsigned workers = 1, bool locate_intersection = true) {
  if (alpha_grid.empty())
    throw std::invalid_argument("sweep_alpha: alpha grid must not be empty");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > 0.0 && alpha_grid[i] < 1.0))
      throw std::invalid_argument("sweep_alpha: grid values must lie in (0, 1)");
    if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1]))
      throw std::invalid_argument("sweep_alpha: grid must be strictly ascending");
  }

  SweepResult result;
  result.alphas = alpha_grid;
  result.trials_per_point = trials;
  double best_sum = std::numeric_limits<double>::infinity();
  for (double alpha : alpha_grid) {
    ProtocolConfig cfg = cfg_template;
    cfg.alpha = alpha;
    const RateEstimate ue = mc_error_rate(cfg, trials, master_seed, workers);
    const RateEstimate ud = mc_detection_rate(cfg, trials, master_seed, workers);
    double bound = std::numeric_limits<double>::quiet_NaN();
    if (1.0 - cfg.delta < alpha) bound = pd_bound(cfg, crossover_matrix(cfg));
    result.p_ue.push_back(ue.rate);
    result.p_ue_halfwidth.push_back(ue.halfwidth95);
    result.p_ud_mc.push_back(ud.rate);
    result.p_ud_mc_halfwidth.push_back(ud.halfwidth95);
    result.p_ud_bound.push_back(bound);
    const double sum = ue.rate + bound;
    result.p_sum.push_back(sum);
    if (std::isfinite(sum) && sum < best_sum) {
      best_sum = sum;
      result.alpha_min_sum = alpha;
    }
  }

  if (locate_intersection && alpha_grid.size() >= 2) {
    try {
      result.alpha_star = find_alpha_star(cfg_template, trials, 1e-4, master_seed,
                                          DetectionSide::kBound, workers);
    } catch (const NumericError&) {
      // leave NaN: no intersection inside the bracket
    }
  }
  return result;
}

struct KldReport {
  KldEstimate fab_slot1, fab_slot2, fcb_slot1, fcb_slot2;
  int repetitions = 0;
};

// Dave's long-term statistic: divergence between pre-attack and
// post-countermeasure observations per band and slot. Each repetition draws
// fresh before/after populations of n_samples; reported values are the means
// over repetitions. The f_CB "after" samples are Dave's raw (unnormalized)
// receptions.
inline KldReport kld_report(const ProtocolConfig& cfg, std::size_t n_samples,
                            std::uint64_t master_seed, int repetitions = 10,
                            int k = 1) {
  cfg.validate();
  if (repetitions < 1)
    throw std::invalid_argument("kld_report: repetitions must be >= 1");

  KldReport report;
  report.repetitions = repetitions;
  KldEstimate* slots[4] = {&report.fab_slot1, &report.fab_slot2,
                           &report.fcb_slot1, &report.fcb_slot2};

  std::vector<ComplexSample> before_fab(n_samples), before_fcb(n_samples);
  std::vector<ComplexSample> after(4 * n_samples);
  for (int rep = 0; rep < repetitions; ++rep) {
    RngStream fab_stream(master_seed, stream_domain::kPreattackFab +
                                          static_cast<std::uint64_t>(rep));
    RngStream fcb_stream(master_seed, stream_domain::kPreattackFcb +
                                          static_cast<std::uint64_t>(rep));
    for (std::size_t i = 0; i < n_samples; ++i) {
      before_fab[i] = draw_preattack_fab(cfg, fab_stream);
      before_fcb[i] = draw_preattack_fcb(cfg, fcb_stream);
    }
    for (std::size_t i = 0; i < n_samples; ++i) {
      RngStream stream(master_seed,
                       stream_domain::kKldFrames +
                           (static_cast<std::uint64_t>(rep) << 40) + i);
      const FrameRealization f = draw_frame(cfg, stream);
      after[0 * n_samples + i] = f.y_d1_fab;
      after[1 * n_samples + i] = f.y_d2_fab;
      after[2 * n_samples + i] = f.y_d1_fcb;
      after[3 * n_samples + i] = f.y_d2_fcb;
    }
    for (int s = 0; s < 4; ++s) {
      const auto& before = s < 2 ? before_fab : before_fcb;
      const KldEstimate est =
          knn_kld(before,
                  std::span<const ComplexSample>(after.data() + s * n_samples,
                                                 n_samples),
                  k);
      slots[s]->value += est.value;
      slots[s]->k = est.k;
      slots[s]->n_before = est.n_before;
      slots[s]->n_after = est.n_after;
      slots[s]->zero_distance_fixups += est.zero_distance_fixups;
    }
  }
  for (KldEstimate* e : slots) e->value /= repetitions;
  return report;
}

}  // namespace ratehalf
