#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mzikd/cli.hpp"
#include "mzikd/harness.hpp"
#include "test_support.hpp"

using mzikd::adversary::StrategyKind;
using mzikd::harness::Curve;
using mzikd::harness::InitPolicy;
using mzikd::harness::Scenario;
using mzikd::harness::ScenarioError;
using testsup::kPi;

namespace fs = std::filesystem;

namespace {

Scenario quiet_scenario(std::size_t bits, std::size_t trials,
                        std::uint64_t seed) {
  Scenario s;
  s.n_bits = bits;
  s.trials = trials;
  s.seed = seed;
  return s;
}

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = mzikd::cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mzikd-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kScriptConfig =
    "[scenario]\n"
    "bits = 10\n"
    "seed = 1\n"
    "tol = 0.01\n"
    "sifting = true\n"
    "[script]\n"
    "bit1 = phi=0 psi=0\n"
    "bit2 = phi=pi psi=0\n"
    "bit3 = phi=pi psi=pi\n"
    "bit4 = phi=0 psi=0\n"
    "bit5 = phi=pi psi=pi\n"
    "bit6 = phi=0 psi=0 vb=-0.8\n"
    "bit7 = phi=0 psi=pi\n"
    "bit8 = phi=pi psi=pi va=-0.5\n"
    "bit9 = phi=0 psi=pi\n"
    "bit10 = phi=pi psi=pi\n";

}  // namespace

TEST_CASE("scenario validation rejects inconsistent settings") {
  Scenario s = quiet_scenario(0, 1, 1);
  CHECK_THROWS_AS(mzikd::harness::validate(s), ScenarioError);
  s = quiet_scenario(16, 1, 1);
  s.tol = 0.0;
  CHECK_THROWS_AS(mzikd::harness::validate(s), ScenarioError);
  s.tol = 1.5;
  CHECK_THROWS_AS(mzikd::harness::validate(s), ScenarioError);
  s = quiet_scenario(16, 1, 1);
  s.channel.phase_jitter_sd = -0.1;
  CHECK_THROWS_AS(mzikd::harness::validate(s), ScenarioError);
  s = quiet_scenario(16, 1, 1);
  s.init_policy = InitPolicy::per_bit;  // needs sifting off
  CHECK_THROWS_AS(mzikd::harness::validate(s), ScenarioError);
  s = quiet_scenario(16, 1, 1);
  s.attack = StrategyKind::memory;
  s.memory_key_bits = 0;
  CHECK_THROWS_AS(mzikd::harness::validate(s), ScenarioError);
  CHECK_NOTHROW(mzikd::harness::validate(quiet_scenario(16, 1, 1)));
}

TEST_CASE("a zero-trial run returns an empty report") {
  const auto rep = mzikd::harness::run_monte_carlo(quiet_scenario(16, 0, 1));
  CHECK(rep.trials == 0);
  CHECK(rep.total_bits == 0);
  CHECK(rep.kept_bits == 0);
  CHECK(rep.agreement_failures == 0);
}

TEST_CASE("the kept rate concentrates near one half on a quiet line") {
  const auto rep = mzikd::harness::run_monte_carlo(quiet_scenario(5000, 20, 3));
  CHECK(rep.total_bits == 100000);
  CHECK(rep.kept_rate > 0.49);
  CHECK(rep.kept_rate < 0.51);
  CHECK(rep.error_bits == 0);
  CHECK(rep.announced_error_rate == 0.0);
  CHECK(rep.agreement_failures == 0);
}

TEST_CASE("reports are identical for a fixed seed and any thread count") {
  Scenario s = quiet_scenario(800, 6, 11);
  s.channel.phase_jitter_sd = 0.05;
  s.channel.detector_error_sd = 0.01;
  s.channel.seed = 2;

  s.threads = 1;
  const auto a = mzikd::harness::run_monte_carlo(s);
  const auto b = mzikd::harness::run_monte_carlo(s);
  CHECK(mzikd::harness::report_text(a) == mzikd::harness::report_text(b));
  CHECK(mzikd::harness::report_json(a) == mzikd::harness::report_json(b));

  s.threads = 4;
  const auto c = mzikd::harness::run_monte_carlo(s);
  CHECK(mzikd::harness::report_text(a) == mzikd::harness::report_text(c));

  Scenario other = s;
  other.seed = 12;
  const auto d = mzikd::harness::run_monte_carlo(other);
  CHECK(mzikd::harness::report_text(a) != mzikd::harness::report_text(d));
}

TEST_CASE("per-session initialization restores throughput under bias") {
  Scenario s = quiet_scenario(3000, 2, 21);
  s.channel.static_offset = 1.0;
  // Uncorrected, the bias pushes every reading out of the window.
  const auto broken = mzikd::harness::run_monte_carlo(s);
  CHECK(broken.kept_bits == 0);
  CHECK(broken.announced_error_rate == 1.0);

  s.init_policy = InitPolicy::per_session;
  const auto fixed = mzikd::harness::run_monte_carlo(s);
  CHECK(fixed.kept_rate > 0.45);
  CHECK(fixed.kept_rate < 0.55);
  CHECK(fixed.error_bits == 0);
  CHECK(fixed.agreement_failures == 0);
}

TEST_CASE("per-bit initialization keeps every bit in echo mode") {
  Scenario s = quiet_scenario(2000, 1, 23);
  s.channel.static_offset = 2.0;
  s.sifting = false;
  s.init_policy = InitPolicy::per_bit;
  const auto rep = mzikd::harness::run_monte_carlo(s);
  CHECK(rep.kept_bits == rep.total_bits);
  CHECK(rep.agreement_failures == 0);
}

TEST_CASE("the visibility grid matches the closed form") {
  CHECK_THROWS_AS(mzikd::harness::ber_map({0.0, kPi}, {0.0, kPi}, 1),
                  ScenarioError);

  const auto tiny = mzikd::harness::ber_map({0.0, kPi}, {0.0, kPi}, 3);
  REQUIRE(tiny.size() == 9);
  // Row-major with the near-party phase outermost; matched bases read -1,
  // crossed bases +1, quarter-turn mixes 0.
  const double want[9] = {-1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0};
  for (std::size_t k = 0; k < 9; ++k) {
    CHECK(tiny[k][2] == doctest::Approx(want[k]).epsilon(1e-12));
  }
  CHECK(tiny[1][0] == 0.0);
  CHECK(tiny[1][1] == doctest::Approx(kPi / 2.0));
  CHECK(tiny[3][0] == doctest::Approx(kPi / 2.0));
  CHECK(tiny[3][1] == 0.0);

  const auto grid = mzikd::harness::ber_map({0.0, kPi}, {0.0, kPi});
  CHECK(grid.size() == 181 * 181);
  for (std::size_t k = 0; k < grid.size(); k += 97) {
    const double expect = -std::cos(grid[k][0] - grid[k][1]);
    CHECK(std::abs(grid[k][2] - expect) <= 1e-9);
  }
}

TEST_CASE("fringe curves match their closed forms end to end") {
  CHECK_THROWS_AS(
      mzikd::harness::fringe_curves(Curve::v56, {0.0, kPi}, 0.0),
      ScenarioError);

  const std::pair<double, double> range{0.0, 2.0 * kPi};
  const auto v56 = mzikd::harness::fringe_curves(Curve::v56, range, 0.01);
  const auto v34 = mzikd::harness::fringe_curves(Curve::v34, range, 0.01);
  const auto in34 = mzikd::harness::fringe_curves(Curve::in34, range, 0.01);
  const auto in78 = mzikd::harness::fringe_curves(Curve::in78, range, 0.01);
  REQUIRE(v56.size() == 629);
  REQUIRE(v34.size() == v56.size());
  REQUIRE(in34.size() == v56.size());
  REQUIRE(in78.size() == v56.size());
  CHECK(v56.front().first == 0.0);
  CHECK(v56.back().first > 2.0 * kPi - 0.011);
  for (std::size_t k = 0; k < v56.size(); ++k) {
    const double x = v56[k].first;
    CHECK(std::abs(v56[k].second - std::cos(x)) <= 1e-9);
    // The one-way mid-line intensities are always balanced.
    CHECK(std::abs(v34[k].second) <= 1e-9);
    CHECK(std::abs(in34[k].second - (1.0 - std::sin(x))) <= 1e-9);
    // Return-pass coherent sum against a fixed outbound basis.
    CHECK(std::abs(in78[k].second - (1.0 + std::sin(x))) <= 1e-9);
  }

  for (const char* name : {"v56", "v34", "in34", "in78"}) {
    CHECK(mzikd::harness::curve_name(
              mzikd::harness::curve_from_name(name)) == std::string(name));
  }
  CHECK_THROWS_AS(mzikd::harness::curve_from_name("v78"), ScenarioError);
}

TEST_CASE("the trial loop covers every index exactly once") {
  for (unsigned threads : {0u, 1u, 3u}) {
    std::vector<int> hits(17, 0);
    mzikd::harness::for_each_trial(hits.size(), threads,
                                   [&](std::size_t t) { hits[t] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  bool called = false;
  mzikd::harness::for_each_trial(0, 2, [&](std::size_t) { called = true; });
  CHECK_FALSE(called);
}

TEST_CASE("emitters render every field and stay machine-readable") {
  const auto rep = mzikd::harness::run_monte_carlo(quiet_scenario(100, 2, 5));
  const auto text = mzikd::harness::report_text(rep);
  CHECK(text.find("trials = 2") != std::string::npos);
  CHECK(text.find("kept_rate = ") != std::string::npos);
  CHECK(text.find("agreement_failures = 0") != std::string::npos);
  CHECK(text.find("wall") == std::string::npos);

  const auto j = nlohmann::json::parse(mzikd::harness::report_json(rep));
  CHECK(j.at("trials") == 2);
  CHECK(j.at("total_bits") == 200);
  CHECK(j.contains("kept_rate"));
  CHECK(j.contains("announced_error_rate"));
  CHECK_FALSE(j.contains("wall_seconds"));

  const auto grid = mzikd::harness::ber_map({0.0, kPi}, {0.0, kPi}, 2);
  const auto csv = mzikd::harness::ber_map_csv(grid);
  CHECK(csv.rfind("phi,psi,visibility\n", 0) == 0);
  CHECK(nlohmann::json::parse(mzikd::harness::ber_map_json(grid)).size() == 4);

  const auto curve =
      mzikd::harness::fringe_curves(Curve::v56, {0.0, kPi}, 0.5);
  const auto ccsv = mzikd::harness::curve_csv(curve);
  CHECK(ccsv.rfind("phase,value\n", 0) == 0);
  CHECK(nlohmann::json::parse(mzikd::harness::curve_json(curve)).size() ==
        curve.size());

  Scenario atk = quiet_scenario(8, 4, 6);
  atk.attack = StrategyKind::passive_tap;
  const auto arep = mzikd::harness::run_monte_carlo(atk);
  const auto atext = mzikd::harness::report_text(arep);
  CHECK(atext.find("strategy = passive-tap") != std::string::npos);
  CHECK(atext.find("eta_analytic = ") != std::string::npos);
  const auto aj = nlohmann::json::parse(mzikd::harness::report_json(arep));
  CHECK(aj.at("strategy") == "passive-tap");
  CHECK(aj.at("attack_block_bits") == 8);
}

TEST_CASE("a passive campaign shows coin statistics and no detection") {
  Scenario s = quiet_scenario(16, 200, 31);
  s.attack = StrategyKind::passive_tap;
  const auto rep = mzikd::harness::run_monte_carlo(s);
  REQUIRE(rep.attack.has_value());
  CHECK(rep.attack->per_bit_success > 0.45);
  CHECK(rep.attack->per_bit_success < 0.55);
  CHECK(rep.attack->block_success <= 0.01);
  CHECK(rep.attack->detection_rate == 0.0);
  CHECK(rep.attack->eta_analytic == std::ldexp(1.0, -16));
}

TEST_CASE("the granted interferometric attack is consistent, not correct") {
  Scenario informed = quiet_scenario(32, 50, 37);
  informed.attack = StrategyKind::brute_force;
  informed.delta_prime = 0.0;
  const auto aligned = mzikd::harness::run_monte_carlo(informed);
  REQUIRE(aligned.attack.has_value());
  CHECK(aligned.attack->per_bit_success == 1.0);
  CHECK(aligned.attack->block_success == 1.0);
  CHECK(aligned.attack->consistent_rate == 1.0);

  Scenario blind = quiet_scenario(32, 400, 41);
  blind.attack = StrategyKind::brute_force;
  const auto rep = mzikd::harness::run_monte_carlo(blind);
  REQUIRE(rep.attack.has_value());
  // Every trial recovers the block or its complement; which one is a coin.
  CHECK(rep.attack->consistent_rate == 1.0);
  CHECK(rep.attack->block_success > 0.4);
  CHECK(rep.attack->block_success < 0.6);
  CHECK(rep.attack->per_bit_success > 0.4);
  CHECK(rep.attack->per_bit_success < 0.6);
  CHECK(rep.attack->eta_analytic == 0.5);
  CHECK(rep.attack->detection_rate == 0.0);
}

TEST_CASE("sifting collapses the memory attack to per-key guessing") {
  Scenario s = quiet_scenario(64, 3000, 43);
  s.attack = StrategyKind::memory;
  s.memory_key_bits = 8;
  const auto rep = mzikd::harness::run_monte_carlo(s);
  REQUIRE(rep.attack.has_value());
  CHECK(rep.attack->n_bits == 8);
  CHECK(rep.attack->per_bit_success > 0.47);
  CHECK(rep.attack->per_bit_success < 0.53);
  // Two candidates, each hitting with probability 2^-8.
  CHECK(rep.attack->eta_analytic == std::ldexp(1.0, -8));
  CHECK(rep.attack->block_success > 0.0014);
  CHECK(rep.attack->block_success < 0.0143);

  Scenario unsifted = quiet_scenario(24, 200, 47);
  unsifted.attack = StrategyKind::memory;
  unsifted.sifting = false;
  const auto open = mzikd::harness::run_monte_carlo(unsifted);
  REQUIRE(open.attack.has_value());
  // Without sifting the complement trick always covers the block.
  CHECK(open.attack->block_success == 1.0);
  CHECK(open.attack->eta_analytic == 1.0);
}

TEST_CASE("an intercepting transceiver is detected every session") {
  Scenario s = quiet_scenario(32, 50, 53);
  s.attack = StrategyKind::intercept_resend;
  const auto rep = mzikd::harness::run_monte_carlo(s);
  REQUIRE(rep.attack.has_value());
  CHECK(rep.attack->detection_rate == 1.0);
  CHECK(rep.attack->block_success > 0.9);  // mean announced-error rate

  Scenario lucky = s;
  lucky.disturbance.fixed = true;
  lucky.disturbance.theta = 0.0;
  const auto silent = mzikd::harness::run_monte_carlo(lucky);
  CHECK(silent.attack->detection_rate == 0.0);
  CHECK(silent.attack->per_bit_success == 1.0);
}

TEST_CASE("the command line front end drives every subcommand") {
  const fs::path dir = fresh_dir("cli");
  const std::string out_dir = dir.string();

  SUBCASE("help and usage errors") {
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"--help"}).out.find("simulate") != std::string::npos);
    CHECK(cli({}).code == 1);
    CHECK(cli({"simulate", "--nope"}).code == 1);
    CHECK(cli({"attack-eval", "--strategy", "quantum"}).code == 1);
    CHECK(cli({"ber-map", "--res", "1", "--out", out_dir}).code == 2);
  }

  SUBCASE("scripted session, replay and tamper detection") {
    const fs::path cfg = dir / "script.cfg";
    spit(cfg, kScriptConfig);
    const auto run =
        cli({"--out", out_dir, "simulate", "--script", cfg.string()});
    CHECK(run.code == 0);
    CHECK(run.out.find("m_alice = 0910199991") != std::string::npos);
    CHECK(run.out.find("m_bob = 0910199991") != std::string::npos);
    CHECK(run.out.find("announced = 2") != std::string::npos);
    const fs::path transcript = dir / "transcript.jsonl";
    REQUIRE(fs::exists(transcript));

    const auto replay = cli({"replay", transcript.string()});
    CHECK(replay.code == 0);
    CHECK(replay.out.find("replay = match") != std::string::npos);

    // A single edited reading breaks byte-exact replay.
    std::string text = slurp(transcript);
    const auto pos = text.find("\"v_a\":1.0");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 9, "\"v_a\":0.2");
    const fs::path doctored = dir / "doctored.jsonl";
    spit(doctored, text);
    const auto bad = cli({"replay", doctored.string()});
    CHECK(bad.code == 3);
    CHECK(bad.out.find("replay = mismatch") != std::string::npos);

    CHECK(cli({"simulate", "--script", cfg.string(), "--bits", "9", "--out",
               out_dir})
              .code == 1);
  }

  SUBCASE("monte-carlo simulate writes reports in both formats") {
    const auto run = cli({"--out", out_dir, "--seed", "4", "simulate",
                          "--bits", "400", "--trials", "2"});
    CHECK(run.code == 0);
    CHECK(run.out.find("kept_rate = ") != std::string::npos);
    REQUIRE(fs::exists(dir / "report.txt"));

    const auto jrun = cli({"--out", out_dir, "--format", "json", "simulate",
                           "--bits", "200", "--trials", "1"});
    CHECK(jrun.code == 0);
    REQUIRE(fs::exists(dir / "report.json"));
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j.at("trials") == 1);
    CHECK(j.at("total_bits") == 200);
  }

  SUBCASE("grid and curve artifacts") {
    const auto run = cli({"--out", out_dir, "--format", "json", "ber-map",
                          "--res", "3"});
    CHECK(run.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "ber_map.json"));
    CHECK(j.size() == 9);
    CHECK(j[0].at("visibility").get<double>() == doctest::Approx(-1.0));

    const auto curves = cli({"--out", out_dir, "curves", "--which", "v56",
                             "--step", "0.5"});
    CHECK(curves.code == 0);
    const auto csv = slurp(dir / "curve_v56.csv");
    CHECK(csv.rfind("phase,value\n", 0) == 0);
    CHECK(cli({"--out", out_dir, "curves", "--step", "-1"}).code == 1);
  }

  SUBCASE("attack evaluation") {
    const auto run = cli({"--out", out_dir, "attack-eval", "--strategy",
                          "memory", "--n", "6", "--trials", "200", "--bits",
                          "32"});
    CHECK(run.code == 0);
    CHECK(run.out.find("strategy = memory") != std::string::npos);
    REQUIRE(fs::exists(dir / "attack_report.txt"));
    const auto text = slurp(dir / "attack_report.txt");
    CHECK(text.find("eta_analytic = 0.015625") != std::string::npos);
  }

  SUBCASE("calibration demo reports verdicts") {
    const auto run = cli({"--out", out_dir, "--seed", "6", "init-demo",
                          "--offset", "1.0", "--auth-rounds", "12"});
    CHECK(run.code == 0);
    CHECK(run.out.find("clean_verdict = clean") != std::string::npos);
    CHECK(run.out.find("intercept_verdict = suspect") != std::string::npos);
    REQUIRE(fs::exists(dir / "baseline.txt"));
    CHECK(slurp(dir / "baseline.txt").rfind("mzikd-baseline v1", 0) == 0);
  }

  SUBCASE("the environment variable selects the output directory") {
    const fs::path env_dir = fresh_dir("cli-env");
    setenv("MZIKD_OUT", env_dir.string().c_str(), 1);
    const auto run = cli({"curves", "--which", "v34", "--step", "1.0"});
    CHECK(run.code == 0);
    CHECK(fs::exists(env_dir / "curve_v34.csv"));
    // An explicit flag still wins over the environment.
    const auto forced =
        cli({"--out", out_dir, "curves", "--which", "in34", "--step", "1.0"});
    CHECK(forced.code == 0);
    CHECK(fs::exists(dir / "curve_in34.csv"));
    CHECK_FALSE(fs::exists(env_dir / "curve_in34.csv"));
    unsetenv("MZIKD_OUT");
    fs::remove_all(env_dir);
  }

  fs::remove_all(dir);
}
