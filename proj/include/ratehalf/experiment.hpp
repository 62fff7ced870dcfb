#pragma once

// Experiment configuration and the command implementations behind the CLI.
//
// Configuration precedence: command-line flag > config file (flat key=value,
// '#' comments) > RATEHALF_SEED environment variable (seed only) > built-in
// default. All commands are deterministic functions of (config, seed); worker
// count never changes emitted bytes.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratehalf/analysis.hpp"
#include "ratehalf/errors.hpp"

namespace ratehalf {

struct AlphaGridSpec {
  double start = 0.51;
  double stop = 0.9999;
  int count = 200;
};

struct ExperimentConfig {
  double snr_db = 35.0;
  double alpha = 0.99885;
  double delta = 0.495;
  int m_psk = 4;
  double rho = 1e-3;
  double sigma_ac2 = 100.0;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0 = one per hardware thread
  double target_pfa = 0.01;
  AlphaGridSpec grid;
  std::string out;  // empty = per-command default file name
};

inline ProtocolConfig make_protocol_config(const ExperimentConfig& xc) {
  ProtocolConfig cfg;
  cfg.alpha = xc.alpha;
  cfg.m = xc.m_psk;
  cfg.noise_power = snr_db_to_noise_power(xc.snr_db);
  cfg.rho = xc.rho;
  cfg.sigma_ac2 = xc.sigma_ac2;
  cfg.delta = xc.delta;
  return cfg;
}

inline std::vector<double> expand_grid(const AlphaGridSpec& g) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(g.count));
  if (g.count == 1) {
    v.push_back(g.start);
    return v;
  }
  for (int i = 0; i < g.count; ++i)
    v.push_back(g.start + (g.stop - g.start) * i / (g.count - 1));
  return v;
}

namespace detail {

inline double parse_double(const std::string& text, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw ConfigError(where + ": invalid number '" + text + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& text, const std::string& where) {
  if (text.empty() || text[0] == '-')
    throw ConfigError(where + ": invalid unsigned integer '" + text + "'");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0')
    throw ConfigError(where + ": invalid unsigned integer '" + text + "'");
  return static_cast<std::uint64_t>(v);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline AlphaGridSpec parse_alpha_grid(const std::string& text,
                                      const std::string& where = "--alpha-grid") {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ':')) parts.push_back(token);
  if (parts.size() != 3)
    throw ConfigError(where + ": expected start:stop:count, got '" + text + "'");
  AlphaGridSpec g;
  g.start = detail::parse_double(parts[0], where);
  g.stop = detail::parse_double(parts[1], where);
  const std::uint64_t count = detail::parse_u64(parts[2], where);
  if (count < 1 || count > 1000000)
    throw ConfigError(where + ": count must lie in [1, 1000000]");
  g.count = static_cast<int>(count);
  return g;
}

// Applies key=value lines from `path` onto `xc`, skipping keys already pinned
// by command-line flags. Errors carry the offending file line. Returns the set
// of keys the file provided (whether applied or shadowed by a flag).
inline std::set<std::string> apply_config_file(ExperimentConfig& xc,
                                               const std::string& path,
                                               const std::set<std::string>& flag_set) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
      setters = {
          {"snr_db", [&](const std::string& v, const std::string& w) { xc.snr_db = detail::parse_double(v, w); }},
          {"alpha", [&](const std::string& v, const std::string& w) { xc.alpha = detail::parse_double(v, w); }},
          {"delta", [&](const std::string& v, const std::string& w) { xc.delta = detail::parse_double(v, w); }},
          {"m_psk", [&](const std::string& v, const std::string& w) { xc.m_psk = static_cast<int>(detail::parse_u64(v, w)); }},
          {"rho", [&](const std::string& v, const std::string& w) { xc.rho = detail::parse_double(v, w); }},
          {"sigma_ac2", [&](const std::string& v, const std::string& w) { xc.sigma_ac2 = detail::parse_double(v, w); }},
          {"trials", [&](const std::string& v, const std::string& w) { xc.trials = detail::parse_u64(v, w); }},
          {"seed", [&](const std::string& v, const std::string& w) { xc.seed = detail::parse_u64(v, w); }},
          {"workers", [&](const std::string& v, const std::string& w) { xc.workers = static_cast<unsigned>(detail::parse_u64(v, w)); }},
          {"target_pfa", [&](const std::string& v, const std::string& w) { xc.target_pfa = detail::parse_double(v, w); }},
          {"alpha_grid", [&](const std::string& v, const std::string& w) { xc.grid = parse_alpha_grid(v, w); }},
          {"out", [&](const std::string& v, const std::string&) { xc.out = v; }},
      };

  std::set<std::string> provided;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(line_no);
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
    provided.insert(key);
    if (flag_set.count(key)) continue;  // flags take precedence
    it->second(value, where);
  }
  return provided;
}

// RATEHALF_SEED applies only when neither a flag nor the config file set one.
inline void apply_env_seed(ExperimentConfig& xc, bool seed_already_set) {
  if (seed_already_set) return;
  if (const char* env = std::getenv("RATEHALF_SEED"))
    xc.seed = detail::parse_u64(env, "RATEHALF_SEED");
}

inline void validate_experiment(const ExperimentConfig& xc) {
  try {
    make_protocol_config(xc).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (xc.trials < 1) throw ConfigError("trials must be >= 1");
  if (!(xc.target_pfa > 0.0 && xc.target_pfa <= 1.0))
    throw ConfigError("target_pfa must lie in (0, 1]; got " +
                      std::to_string(xc.target_pfa));
  if (!(xc.grid.start > 0.0 && xc.grid.start < 1.0 && xc.grid.stop > 0.0 &&
        xc.grid.stop < 1.0))
    throw ConfigError("alpha_grid bounds must lie in (0, 1)");
  if (xc.grid.count > 1 && !(xc.grid.start < xc.grid.stop))
    throw ConfigError("alpha_grid needs start < stop when count > 1");
  if (xc.grid.count < 1) throw ConfigError("alpha_grid count must be >= 1");
}

namespace detail {

// Probabilities and derived statistics are emitted with 6 significant digits.
inline double round_sig6(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

inline std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing output file '" + path + "'");
}

}  // namespace detail

// simulate: fixed-alpha Monte Carlo of error rate, detection rate,
// false-alarm rate and the transmit-energy audit; JSON summary to file.
inline void run_simulate(const ExperimentConfig& xc, std::ostream& echo) {
  const ProtocolConfig cfg = make_protocol_config(xc);
  const ErrorBreakdown errors =
      mc_error_breakdown(cfg, xc.trials, xc.seed, xc.workers);
  const RateEstimate& ue = errors.joint;
  const RateEstimate ud = mc_detection_rate(cfg, xc.trials, xc.seed, xc.workers);
  const RateEstimate fa = mc_false_alarm_rate(cfg, xc.trials, xc.seed, xc.workers);
  const EnergyAudit audit = mc_energy_audit(cfg, xc.trials, xc.seed, xc.workers);
  const double uf_bound = pfa_bound(cfg.delta, cfg.noise_power);
  double ud_bound = std::numeric_limits<double>::quiet_NaN();
  if (1.0 - cfg.delta < cfg.alpha) ud_bound = pd_bound(cfg, crossover_matrix(cfg));

  nlohmann::json j;
  j["command"] = "simulate";
  j["config"] = {{"alpha", xc.alpha},       {"delta", xc.delta},
                 {"m_psk", xc.m_psk},       {"noise_power", cfg.noise_power},
                 {"rho", xc.rho},           {"seed", xc.seed},
                 {"sigma_ac2", xc.sigma_ac2}, {"snr_db", xc.snr_db},
                 {"trials", xc.trials}};
  j["p_ue"] = detail::round_sig6(ue.rate);
  j["p_ue_alice_bit"] = detail::round_sig6(errors.alice_bit);
  j["p_ue_charlie_symbol"] = detail::round_sig6(errors.charlie_symbol);
  j["p_ud_mc"] = detail::round_sig6(ud.rate);
  j["p_ud_bound"] = detail::round_sig6(ud_bound);  // null when alpha <= 1-delta
  j["p_uf_bound"] = detail::round_sig6(uf_bound);
  j["p_fa_mc"] = detail::round_sig6(fa.rate);
  j["energy_audit"] = {{"fab", detail::round_sig6(audit.fab)},
                       {"fcb", detail::round_sig6(audit.fcb)},
                       {"alice", detail::round_sig6(audit.alice)},
                       {"charlie", detail::round_sig6(audit.charlie)}};
  j["confidence"] = {{"p_ue", detail::round_sig6(ue.halfwidth95)},
                     {"p_ud_mc", detail::round_sig6(ud.halfwidth95)},
                     {"p_fa_mc", detail::round_sig6(fa.halfwidth95)}};

  const std::string path = xc.out.empty() ? "simulate.json" : xc.out;
  detail::write_text_file(path, j.dump(2) + "\n");

  echo << "p_ue=" << detail::fmt(ue.rate) << " (±" << detail::fmt(ue.halfwidth95)
       << ", alice=" << detail::fmt(errors.alice_bit)
       << ", charlie=" << detail::fmt(errors.charlie_symbol)
       << ")  p_ud_mc=" << detail::fmt(ud.rate) << " (±"
       << detail::fmt(ud.halfwidth95) << ")\n"
       << "p_ud_bound=" << detail::fmt(ud_bound)
       << "  p_uf_bound=" << detail::fmt(uf_bound)
       << "  p_fa_mc=" << detail::fmt(fa.rate) << "\n"
       << "energy: fab=" << detail::fmt(audit.fab) << " fcb=" << detail::fmt(audit.fcb)
       << " alice=" << detail::fmt(audit.alice)
       << " charlie=" << detail::fmt(audit.charlie) << "\n"
       << "wrote " << path << "\n";
}

// sweep: per-alpha curves plus the located intersection, as CSV.
inline void run_sweep(const ExperimentConfig& xc, std::ostream& echo) {
  const ProtocolConfig cfg_template = make_protocol_config(xc);
  const std::vector<double> grid = expand_grid(xc.grid);
  const SweepResult sweep =
      sweep_alpha(cfg_template, grid, xc.trials, xc.seed, xc.workers,
                  /*locate_intersection=*/grid.size() >= 2);

  std::string csv = "alpha,p_ue,p_ue_ci,p_ud_bound,p_ud_mc,p_sum\n";
  for (std::size_t i = 0; i < sweep.alphas.size(); ++i) {
    csv += detail::fmt(sweep.alphas[i], "%.10g");
    csv += ',';
    csv += detail::fmt(sweep.p_ue[i]);
    csv += ',';
    csv += detail::fmt(sweep.p_ue_halfwidth[i]);
    csv += ',';
    csv += detail::fmt(sweep.p_ud_bound[i]);
    csv += ',';
    csv += detail::fmt(sweep.p_ud_mc[i]);
    csv += ',';
    csv += detail::fmt(sweep.p_sum[i]);
    csv += '\n';
  }
  if (std::isfinite(sweep.alpha_star))
    csv += "# alpha_star=" + detail::fmt(sweep.alpha_star, "%.10g") + "\n";
  if (std::isfinite(sweep.alpha_min_sum))
    csv += "# alpha_min_sum=" + detail::fmt(sweep.alpha_min_sum, "%.10g") + "\n";

  const std::string path = xc.out.empty() ? "sweep.csv" : xc.out;
  detail::write_text_file(path, csv);

  echo << "alpha_star=" << detail::fmt(sweep.alpha_star, "%.10g")
       << "  alpha_min_sum=" << detail::fmt(sweep.alpha_min_sum, "%.10g") << "\n"
       << "wrote " << path << " (" << sweep.alphas.size() << " rows)\n";
}

// calibrate: smallest delta meeting the false-alarm target, to stdout.
inline void run_calibrate(const ExperimentConfig& xc, std::ostream& echo) {
  const double noise = snr_db_to_noise_power(xc.snr_db);
  const double delta = calibrate_delta(noise, xc.target_pfa);  // NumericError if unreachable
  echo << "delta=" << detail::fmt(delta) << "\n"
       << "pfa_bound=" << detail::fmt(pfa_bound(delta, noise)) << "\n";
}

// kld: before/after divergence per band and slot, as CSV.
inline void run_kld(const ExperimentConfig& xc, std::ostream& echo) {
  const ProtocolConfig cfg = make_protocol_config(xc);
  const KldReport report =
      kld_report(cfg, static_cast<std::size_t>(xc.trials), xc.seed);

  const auto row = [&](const char* band, int slot, const KldEstimate& e) {
    return std::string(band) + "," + std::to_string(slot) + "," +
           detail::fmt(e.value) + "," + std::to_string(e.n_before) + "," +
           std::to_string(report.repetitions) + "\n";
  };
  std::string csv = "band,slot,kld,samples,repetitions\n";
  csv += row("f_AB", 1, report.fab_slot1);
  csv += row("f_AB", 2, report.fab_slot2);
  csv += row("f_CB", 1, report.fcb_slot1);
  csv += row("f_CB", 2, report.fcb_slot2);

  const std::string path = xc.out.empty() ? "kld.csv" : xc.out;
  detail::write_text_file(path, csv);

  echo << "kld: fab1=" << detail::fmt(report.fab_slot1.value)
       << " fab2=" << detail::fmt(report.fab_slot2.value)
       << " fcb1=" << detail::fmt(report.fcb_slot1.value)
       << " fcb2=" << detail::fmt(report.fcb_slot2.value) << "\n"
       << "wrote " << path << "\n";
}

// Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numeric
// failure (no intersection / unreachable calibration target).
inline int execute_command(const std::string& command, const ExperimentConfig& xc,
                           std::ostream& echo, std::ostream& diag) {
  try {
    validate_experiment(xc);
    if (command == "simulate")
      run_simulate(xc, echo);
    else if (command == "sweep")
      run_sweep(xc, echo);
    else if (command == "calibrate")
      run_calibrate(xc, echo);
    else if (command == "kld")
      run_kld(xc, echo);
    else
      throw ConfigError("unknown command '" + command + "'");
    return 0;
  } catch (const ConfigError& e) {
    diag << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    diag << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    diag << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    diag << "io error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ratehalf
