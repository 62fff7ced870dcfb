#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "ratehalf/decoders.hpp"
#include "ratehalf/protocol.hpp"
#include "ratehalf/rng.hpp"

using namespace ratehalf;

namespace {

// Config whose detection variances come out as sigma0^2 = 1, sigma1^2 = 2.
ProtocolConfig unit_sigma_cfg() {
  ProtocolConfig cfg;
  cfg.alpha = 0.5;
  cfg.rho = 0.5;
  cfg.noise_power = 0.75;
  cfg.sigma_ac2 = 2.0;
  cfg.m = 4;
  cfg.delta = 0.495;
  return cfg;
}

// Independent oracle: locate the crossing of the two energy densities
// f_x(t) = exp(-t/s_x)/s_x by bisection on their log ratio.
double crossing_by_bisection(double s0, double s1) {
  auto log_ratio = [&](double t) {
    return (-std::log(s1) - t / s1) - (-std::log(s0) - t / s0);
  };
  double lo = 0.0, hi = 1e3;
  REQUIRE(log_ratio(lo) < 0.0);
  REQUIRE(log_ratio(hi) > 0.0);
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (log_ratio(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Noise-free frame with Charlie's side link forced clean (x_hat == x).
FrameRealization noiseless_frame(const ProtocolConfig& cfg, int x, int j, int jd,
                                 ComplexSample h_ab, ComplexSample h_cb) {
  FrameRealization f{};
  f.h_ab = h_ab;
  f.h_cb = h_cb;
  f.h_ac = {40.0, 0.0};
  f.h_ad = {0.5, 0.5};
  f.h_cd = {0.6, 0.8};
  f.alice_bit = OokBit{x};
  f.charlie_symbol = PskSymbol{cfg.m, j};
  f.dummy_psk = PskSymbol{cfg.m, jd};
  const FcbSlot1 s1 = fcb_slot1(cfg, f.alice_bit, f.dummy_psk, f.h_ab, f.h_cb,
                                f.h_ac, {0, 0}, {0, 0}, {0, 0});
  f.y_b1 = s1.y_b1;
  f.y_c1 = s1.y_c1;
  f.charlie_decision = charlie_detect(f.y_c1, cfg);
  f.y_b2 = fcb_slot2(cfg, f.charlie_decision, f.charlie_symbol, f.h_cb, {0, 0});
  return f;
}

}  // namespace

TEST_CASE("ML threshold matches the density crossing", "[decoders]") {
  const ProtocolConfig cfg = unit_sigma_cfg();
  CHECK(charlie_sigma0_sq(cfg) == Catch::Approx(1.0).margin(1e-15));
  CHECK(charlie_sigma1_sq(cfg) == Catch::Approx(2.0).margin(1e-15));

  const double tau = charlie_threshold(cfg);
  CHECK(tau == Catch::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(tau == Catch::Approx(crossing_by_bisection(1.0, 2.0)).margin(1e-9));
}

TEST_CASE("energy extremes decide trivially", "[decoders]") {
  const ProtocolConfig cfg = unit_sigma_cfg();
  CHECK(charlie_detect({0.0, 0.0}, cfg).bit == 0);
  CHECK(charlie_detect({1e6, 0.0}, cfg).bit == 1);
}

TEST_CASE("a vanishing threshold decides one on any visible energy", "[decoders]") {
  ProtocolConfig cfg;
  cfg.alpha = 0.5;
  cfg.rho = 1e-12;
  cfg.noise_power = 1e-12;
  cfg.sigma_ac2 = 2.0;
  REQUIRE(charlie_threshold(cfg) < 1e-9);
  CHECK(charlie_detect({1e-3, 0.0}, cfg).bit == 1);
}

TEST_CASE("degenerate detection is reported", "[decoders]") {
  ProtocolConfig cfg = unit_sigma_cfg();
  cfg.sigma_ac2 = 0.0;  // sigma1^2 collapses onto sigma0^2
  CHECK_THROWS_AS(charlie_threshold(cfg), std::domain_error);
  CHECK_THROWS_AS(crossover_matrix(cfg), std::domain_error);
}

TEST_CASE("crossover closed form at the worked sigma pair", "[decoders]") {
  const CrossoverMatrix c = crossover_matrix(unit_sigma_cfg());
  CHECK(c.p[0][1] == Catch::Approx(0.25).epsilon(1e-12));   // exp(-2 ln 2)
  CHECK(c.p[1][0] == Catch::Approx(0.5).epsilon(1e-12));    // 1 - exp(-ln 2)
  CHECK(c.p[0][0] + c.p[0][1] == Catch::Approx(1.0).margin(1e-15));
  CHECK(c.p[1][0] + c.p[1][1] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("crossover rows sum to one across configurations", "[decoders]") {
  for (double alpha : {0.1, 0.6, 0.99885})
    for (double rho : {1e-3, 0.2})
      for (double sac2 : {1.0, 100.0}) {
        ProtocolConfig cfg;
        cfg.alpha = alpha;
        cfg.rho = rho;
        cfg.sigma_ac2 = sac2;
        const CrossoverMatrix c = crossover_matrix(cfg);
        CHECK(c.p[0][0] + c.p[0][1] == Catch::Approx(1.0).margin(1e-14));
        CHECK(c.p[1][0] + c.p[1][1] == Catch::Approx(1.0).margin(1e-14));
        for (auto& row : c.p)
          for (double v : row) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
          }
      }
}

TEST_CASE("crossover closed form matches Monte Carlo frequencies", "[decoders]") {
  for (double alpha : {0.6, 0.95})
    for (double sac2 : {1.0, 100.0}) {
      ProtocolConfig cfg;
      cfg.alpha = alpha;
      cfg.sigma_ac2 = sac2;
      cfg.rho = 0.05;
      const double tau = charlie_threshold(cfg);
      const CrossoverMatrix c = crossover_matrix(cfg);
      const std::uint64_t n = 200000;
      std::uint64_t miss10 = 0, miss01 = 0;
      for (std::uint64_t t = 0; t < n; ++t) {
        RngStream stream(808, t);
        const ComplexSample h_ac = draw_circular_gaussian(stream, cfg.sigma_ac2);
        const ComplexSample h_cc =
            draw_circular_gaussian(stream, cfg.alpha * cfg.rho);
        const ComplexSample noise = draw_circular_gaussian(stream, cfg.noise_power);
        const ComplexSample y1 =
            std::sqrt(1.0 - cfg.alpha) * h_ac + h_cc + noise;  // x = 1
        const ComplexSample y0 = h_cc + noise;                 // x = 0
        miss10 += energy(y1) <= tau;
        miss01 += energy(y0) > tau;
      }
      const double sigma10 = std::sqrt(c.p[1][0] * (1 - c.p[1][0]) / n);
      const double sigma01 = std::sqrt(c.p[0][1] * (1 - c.p[0][1]) / n);
      CHECK(static_cast<double>(miss10) / n ==
            Catch::Approx(c.p[1][0]).margin(3 * sigma10 + 1e-4));
      CHECK(static_cast<double>(miss01) / n ==
            Catch::Approx(c.p[0][1]).margin(3 * sigma01 + 1e-4));
    }
}

TEST_CASE("dummy removal inverts the masking term", "[decoders]") {
  ProtocolConfig cfg;
  cfg.alpha = 0.8;
  const ComplexSample h_ab{0.4, 0.2}, h_cb{1.1, -0.6};
  const PskSymbol z_d{4, 1};

  const FcbSlot1 off = fcb_slot1(cfg, OokBit{0}, z_d, h_ab, h_cb, {1, 0}, {0, 0},
                                 {0, 0}, {0, 0});
  CHECK(std::abs(remove_dummy(off.y_b1, h_cb, z_d, cfg)) < 1e-15);

  const FcbSlot1 on = fcb_slot1(cfg, OokBit{1}, z_d, h_ab, h_cb, {1, 0}, {0, 0},
                                {0, 0}, {0, 0});
  const ComplexSample cleaned = remove_dummy(on.y_b1, h_cb, z_d, cfg);
  CHECK(std::abs(cleaned - std::sqrt(1.0 - cfg.alpha) * h_ab) < 1e-15);

  const ComplexSample shift{0.3, -0.9};
  CHECK(std::abs(remove_dummy(on.y_b1 + shift, h_cb, z_d, cfg) -
                 (cleaned + shift)) < 1e-15);
}

TEST_CASE("noise-free frames decode exactly", "[decoders]") {
  ProtocolConfig cfg;  // defaults, alpha = 0.99885
  const ComplexSample h_ab{0.7, -0.2}, h_cb{0.9, 0.4};
  for (int x = 0; x < 2; ++x)
    for (int j = 0; j < cfg.m; ++j) {
      const FrameRealization f = noiseless_frame(cfg, x, j, (j + 1) % cfg.m, h_ab, h_cb);
      REQUIRE(f.charlie_decision.bit == x);
      const ComplexSample y_tilde = remove_dummy(f.y_b1, f.h_cb, f.dummy_psk, cfg);
      const JointDecision via_dominant = rhjdd(y_tilde, f.y_b2, f.h_cb, cfg);
      CHECK(via_dominant.a_hat == x);
      CHECK(via_dominant.b_hat == j);
      const JointDecision via_map =
          jmap(y_tilde, f.y_b2, f.h_cb, cfg, crossover_matrix(cfg));
      CHECK(via_map.a_hat == x);
      CHECK(via_map.b_hat == j);
    }
}

TEST_CASE("identity crossovers collapse the MAP mixture onto the dominant term",
          "[decoders]") {
  const ProtocolConfig cfg;
  const CrossoverMatrix eye = identity_crossover();
  for (std::uint64_t t = 0; t < 20000; ++t) {
    RngStream stream(4242, t);
    const FrameRealization f = draw_frame(cfg, stream);
    const ComplexSample y_tilde = remove_dummy(f.y_b1, f.h_cb, f.dummy_psk, cfg);
    const JointDecision a = rhjdd(y_tilde, f.y_b2, f.h_cb, cfg);
    const JointDecision b = jmap(y_tilde, f.y_b2, f.h_cb, cfg, eye);
    REQUIRE(a.a_hat == b.a_hat);
    REQUIRE(a.b_hat == b.b_hat);
  }
}

TEST_CASE("exact decoder does not lose to the dominant-term decoder",
          "[decoders]") {
  const ProtocolConfig cfg;  // reference operating point
  const CrossoverMatrix c = crossover_matrix(cfg);
  const std::uint64_t n = 1000000;
  std::uint64_t err_dominant = 0, err_map = 0;
  for (std::uint64_t t = 0; t < n; ++t) {
    RngStream stream(1001, t);
    const FrameRealization f = draw_frame(cfg, stream);
    const ComplexSample y_tilde = remove_dummy(f.y_b1, f.h_cb, f.dummy_psk, cfg);
    const JointDecision a = rhjdd(y_tilde, f.y_b2, f.h_cb, cfg);
    const JointDecision b = jmap(y_tilde, f.y_b2, f.h_cb, cfg, c);
    err_dominant +=
        (a.a_hat != f.alice_bit.bit || a.b_hat != f.charlie_symbol.index);
    err_map += (b.a_hat != f.alice_bit.bit || b.b_hat != f.charlie_symbol.index);
  }
  CHECK(static_cast<double>(err_map) / n <=
        static_cast<double>(err_dominant) / n + 0.005);
}

TEST_CASE("full ties resolve to the lexicographically smallest pair", "[decoders]") {
  const ProtocolConfig cfg;
  // A dead helper channel makes every slot-2 hypothesis identical, and a zero
  // cleaned slot-1 sample favors a = 0; all b then tie.
  const JointDecision d = rhjdd({0, 0}, {0, 0}, {0, 0}, cfg);
  CHECK(d.a_hat == 0);
  CHECK(d.b_hat == 0);
  const JointDecision dm = jmap({0, 0}, {0, 0}, {0, 0}, cfg, crossover_matrix(cfg));
  CHECK(dm.a_hat == 0);
  CHECK(dm.b_hat == 0);
}
