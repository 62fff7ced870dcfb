#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratehalf/experiment.hpp"

using namespace ratehalf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ratehalf_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("alpha grid strings parse and expand", "[experiment]") {
  const AlphaGridSpec g = parse_alpha_grid("0.6:0.9:4");
  CHECK(g.start == 0.6);
  CHECK(g.stop == 0.9);
  CHECK(g.count == 4);
  const std::vector<double> v = expand_grid(g);
  REQUIRE(v.size() == 4);
  CHECK(v.front() == Catch::Approx(0.6));
  CHECK(v.back() == Catch::Approx(0.9));

  CHECK(expand_grid(parse_alpha_grid("0.5:0.5:1")).size() == 1);
  CHECK_THROWS_AS(parse_alpha_grid("0.5:0.9"), ConfigError);
  CHECK_THROWS_AS(parse_alpha_grid("a:b:c"), ConfigError);
  CHECK_THROWS_AS(parse_alpha_grid("0.1:0.2:0"), ConfigError);
}

TEST_CASE("config files apply with flag precedence and line diagnostics",
          "[experiment]") {
  TempDir tmp;
  const fs::path file = tmp.path / "run.cfg";
  std::ofstream(file) << "# experiment setup\n"
                         "snr_db = 30\n"
                         "alpha=0.9  # inline comment\n"
                         "trials = 5000\n"
                         "seed=99\n"
                         "alpha_grid = 0.6:0.8:3\n";

  ExperimentConfig xc;
  const std::set<std::string> pinned{"alpha"};  // pretend --alpha was given
  const auto provided = apply_config_file(xc, file.string(), pinned);
  CHECK(xc.snr_db == 30.0);
  CHECK(xc.alpha == 0.99885);  // flag wins, file value ignored
  CHECK(xc.trials == 5000);
  CHECK(xc.seed == 99);
  CHECK(xc.grid.count == 3);
  CHECK(provided.count("seed") == 1);
  CHECK(provided.count("alpha") == 1);

  std::ofstream(file) << "bogus_key = 1\n";
  try {
    apply_config_file(xc, file.string(), {});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":1") != std::string::npos);
    CHECK(msg.find("bogus_key") != std::string::npos);
  }

  std::ofstream(file) << "snr_db = 30\ntrials = not_a_number\n";
  try {
    apply_config_file(xc, file.string(), {});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }

  CHECK_THROWS_AS(apply_config_file(xc, (tmp.path / "missing.cfg").string(), {}),
                  ConfigError);
}

TEST_CASE("environment seed applies only as a fallback", "[experiment]") {
  ExperimentConfig xc;
  ::setenv("RATEHALF_SEED", "4242", 1);
  apply_env_seed(xc, /*seed_already_set=*/false);
  CHECK(xc.seed == 4242);

  xc.seed = 7;
  apply_env_seed(xc, /*seed_already_set=*/true);
  CHECK(xc.seed == 7);

  ::setenv("RATEHALF_SEED", "not-a-seed", 1);
  CHECK_THROWS_AS(apply_env_seed(xc, false), ConfigError);
  ::unsetenv("RATEHALF_SEED");
}

TEST_CASE("experiment validation names the violated range", "[experiment]") {
  ExperimentConfig xc;
  xc.alpha = 1.5;
  std::ostringstream echo, diag;
  CHECK(execute_command("simulate", xc, echo, diag) == 2);
  CHECK(diag.str().find("alpha") != std::string::npos);
  CHECK(diag.str().find("(0, 1)") != std::string::npos);

  xc = ExperimentConfig{};
  xc.target_pfa = 0.0;
  CHECK_THROWS_AS(validate_experiment(xc), ConfigError);
  xc = ExperimentConfig{};
  xc.grid = {0.9, 0.6, 10};
  CHECK_THROWS_AS(validate_experiment(xc), ConfigError);
}

TEST_CASE("simulate writes a stable JSON summary", "[experiment]") {
  TempDir tmp;
  ExperimentConfig xc;
  xc.trials = 2000;
  xc.seed = 7;
  xc.out = (tmp.path / "sim.json").string();

  std::ostringstream echo, diag;
  REQUIRE(execute_command("simulate", xc, echo, diag) == 0);
  const std::string first = slurp(xc.out);

  const nlohmann::json j = nlohmann::json::parse(first);
  CHECK(j.at("command") == "simulate");
  CHECK(j.at("p_ue").is_number());
  CHECK(j.at("p_ud_mc").is_number());
  CHECK(j.at("p_ud_bound").is_number());
  CHECK(j.at("p_uf_bound").is_number());
  CHECK(j.at("energy_audit").at("fab").get<double>() ==
        Catch::Approx(0.5).margin(0.05));
  CHECK(j.at("confidence").contains("p_ue"));
  CHECK(j.at("config").at("seed") == 7);

  std::ostringstream echo2, diag2;
  REQUIRE(execute_command("simulate", xc, echo2, diag2) == 0);
  CHECK(slurp(xc.out) == first);  // byte-identical rerun
  CHECK(echo2.str() == echo.str());

  // headline echo mentions the main statistics
  CHECK(echo.str().find("p_ue=") != std::string::npos);
  CHECK(echo.str().find("p_uf_bound=") != std::string::npos);
}

TEST_CASE("simulate fails cleanly on an unwritable output path", "[experiment]") {
  ExperimentConfig xc;
  xc.trials = 100;
  xc.out = "/nonexistent_dir_ratehalf/sim.json";
  std::ostringstream echo, diag;
  CHECK(execute_command("simulate", xc, echo, diag) == 1);
  CHECK(diag.str().find("sim.json") != std::string::npos);
}

TEST_CASE("sweep emits sorted rows with footers and survives a round trip",
          "[experiment]") {
  TempDir tmp;
  ExperimentConfig xc;
  xc.trials = 2000;
  xc.seed = 3;
  xc.grid = {0.6, 0.9995, 5};
  xc.out = (tmp.path / "sweep.csv").string();

  std::ostringstream echo, diag;
  REQUIRE(execute_command("sweep", xc, echo, diag) == 0);
  const std::string csv = slurp(xc.out);
  const std::vector<std::string> lines = split_lines(csv);
  REQUIRE(lines.size() >= 7);  // header + 5 rows + footers
  CHECK(lines[0] == "alpha,p_ue,p_ue_ci,p_ud_bound,p_ud_mc,p_sum");

  double prev_alpha = 0.0;
  for (std::size_t i = 1; i <= 5; ++i) {
    std::istringstream row(lines[i]);
    std::string field;
    std::vector<double> values;
    while (std::getline(row, field, ',')) values.push_back(std::strtod(field.c_str(), nullptr));
    REQUIRE(values.size() == 6);
    CHECK(values[0] > prev_alpha);
    prev_alpha = values[0];
    CHECK(values[1] >= 0.0);
    CHECK(values[1] <= 1.0);
  }
  CHECK(csv.find("# alpha_star=") != std::string::npos);
  CHECK(csv.find("# alpha_min_sum=") != std::string::npos);

  // single-point grid: one row, no intersection footer
  xc.grid = {0.7, 0.7, 1};
  xc.out = (tmp.path / "single.csv").string();
  std::ostringstream echo2, diag2;
  REQUIRE(execute_command("sweep", xc, echo2, diag2) == 0);
  const std::string single = slurp(xc.out);
  CHECK(split_lines(single).size() == 3);  // header + row + min-sum footer
  CHECK(single.find("# alpha_star=") == std::string::npos);
}

TEST_CASE("calibrate prints the inverted deviation", "[experiment]") {
  ExperimentConfig xc;
  std::ostringstream echo, diag;
  REQUIRE(execute_command("calibrate", xc, echo, diag) == 0);
  CHECK(echo.str().find("delta=0.49476") != std::string::npos);
  CHECK(echo.str().find("pfa_bound=") != std::string::npos);

  xc.snr_db = 0.0;  // N = 1: bound cannot fall below ~0.85
  xc.target_pfa = 1e-9;
  std::ostringstream echo2, diag2;
  CHECK(execute_command("calibrate", xc, echo2, diag2) == 3);
  CHECK(diag2.str().find("numeric failure") != std::string::npos);
}

TEST_CASE("kld emits one row per band and slot, reproducibly", "[experiment]") {
  TempDir tmp;
  ExperimentConfig xc;
  xc.trials = 3000;  // samples per repetition
  xc.seed = 12;
  xc.out = (tmp.path / "kld.csv").string();

  std::ostringstream echo, diag;
  REQUIRE(execute_command("kld", xc, echo, diag) == 0);
  const std::string first = slurp(xc.out);
  const std::vector<std::string> lines = split_lines(first);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "band,slot,kld,samples,repetitions");
  CHECK(lines[1].rfind("f_AB,1,", 0) == 0);
  CHECK(lines[2].rfind("f_AB,2,", 0) == 0);
  CHECK(lines[3].rfind("f_CB,1,", 0) == 0);
  CHECK(lines[4].rfind("f_CB,2,", 0) == 0);
  CHECK(lines[1].find(",3000,10") != std::string::npos);

  std::ostringstream echo2, diag2;
  REQUIRE(execute_command("kld", xc, echo2, diag2) == 0);
  CHECK(slurp(xc.out) == first);
}

TEST_CASE("unknown commands are configuration errors", "[experiment]") {
  ExperimentConfig xc;
  std::ostringstream echo, diag;
  CHECK(execute_command("fnord", xc, echo, diag) == 2);
}

TEST_CASE("probability rounding keeps six significant digits", "[experiment]") {
  CHECK(detail::round_sig6(0.123456789) == 0.123457);
  CHECK(detail::round_sig6(9.99001803911e-3) == 9.99002e-3);
  CHECK(detail::round_sig6(0.0) == 0.0);
}
