#include "mzikd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "mzikd/harness.hpp"
#include "mzikd/initialization.hpp"
#include "mzikd/io.hpp"
#include "mzikd/rng.hpp"

namespace mzikd::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Argument-level failure: reported as usage (exit 1), not scenario (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOpts {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out_dir;
  std::string format = "csv";
};

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("MZIKD_OUT"); env && *env) return env;
  return ".";
}

double need_phase(const std::string& text, const char* what) {
  const auto v = io::parse_phase(text);
  if (!v) throw UsageError(std::string("bad ") + what + " '" + text + "'");
  return *v;
}

double phase_or(const std::optional<std::string>& text, double fallback,
                const char* what) {
  return text ? need_phase(*text, what) : fallback;
}

/// Counts accept plain integers and scientific notation ("1e7").
std::size_t need_count(const std::string& text, const char* what) {
  const auto v = io::parse_double(text);
  if (!v || !(*v >= 0.0) || *v > 9.0e15 || std::floor(*v) != *v) {
    throw UsageError(std::string("bad ") + what + " '" + text + "'");
  }
  return static_cast<std::size_t>(*v);
}

std::size_t count_or(const std::optional<std::string>& text,
                     std::size_t fallback, const char* what) {
  return text ? need_count(*text, what) : fallback;
}

bool need_on_off(const std::string& text, const char* what) {
  if (text == "on") return true;
  if (text == "off") return false;
  throw UsageError(std::string(what) + " must be on or off, got '" + text +
                   "'");
}

harness::InitPolicy init_policy_from(const std::string& text) {
  if (text == "off") return harness::InitPolicy::off;
  if (text == "per-session") return harness::InitPolicy::per_session;
  if (text == "per-bit") return harness::InitPolicy::per_bit;
  throw UsageError("init policy must be off, per-session or per-bit, got '" +
                   text + "'");
}

std::optional<adversary::StrategyKind> strategy_from_name(
    const std::string& name) {
  if (name == "passive" || name == "passive-tap") {
    return adversary::StrategyKind::passive_tap;
  }
  if (name == "brute-force" || name == "brute") {
    return adversary::StrategyKind::brute_force;
  }
  if (name == "memory") return adversary::StrategyKind::memory;
  if (name == "intercept" || name == "intercept-resend") {
    return adversary::StrategyKind::intercept_resend;
  }
  return std::nullopt;
}

/// Scenario defaults from a config file; absent keys keep struct defaults.
harness::Scenario scenario_from_config(const io::Config& cfg,
                                       const harness::Scenario& base) {
  harness::Scenario s = base;
  s.n_bits = cfg.get_u64("scenario.bits", s.n_bits);
  s.trials = cfg.get_u64("scenario.trials", s.trials);
  s.seed = cfg.get_u64("scenario.seed", s.seed);
  s.tol = cfg.get_double("scenario.tol", s.tol);
  s.sifting = cfg.get_bool("scenario.sifting", s.sifting);
  if (cfg.has("scenario.init")) {
    s.init_policy = init_policy_from(cfg.get("scenario.init", "off"));
  }
  s.threads = static_cast<unsigned>(cfg.get_u64("scenario.threads", s.threads));
  s.channel.static_offset =
      cfg.get_double("channel.static_offset", s.channel.static_offset);
  s.channel.phase_jitter_sd =
      cfg.get_double("channel.phase_jitter_sd", s.channel.phase_jitter_sd);
  s.channel.detector_error_sd =
      cfg.get_double("channel.detector_error_sd", s.channel.detector_error_sd);
  s.channel.seed = cfg.get_u64("channel.seed", s.channel.seed);
  return s;
}

/// [script] section: keys bit1..bitN, values like "phi=0 psi=pi va=-0.5".
std::vector<protocol::BitScript> script_from_config(const io::Config& cfg) {
  struct Entry {
    long order;
    protocol::BitScript bit;
  };
  std::vector<Entry> entries;
  for (const auto& key : cfg.section_keys("script")) {
    if (key.rfind("bit", 0) != 0) {
      throw UsageError("script key '" + key + "' is not of the form bitN");
    }
    const auto order = io::parse_double(key.substr(3));
    if (!order) throw UsageError("script key '" + key + "' is not bitN");
    protocol::BitScript bit;
    bool phi_seen = false, psi_seen = false;
    for (const auto& tok : io::split(cfg.get("script." + key, ""), ' ')) {
      const std::string item = io::trim(tok);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw UsageError("script entry '" + item + "' is not name=value");
      }
      const std::string name = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      if (name == "phi") {
        bit.phi = need_phase(value, "script phi");
        phi_seen = true;
      } else if (name == "psi") {
        bit.psi = need_phase(value, "script psi");
        psi_seen = true;
      } else if (name == "va") {
        bit.v_a_override = need_phase(value, "script va");
      } else if (name == "vb") {
        bit.v_b_override = need_phase(value, "script vb");
      } else {
        throw UsageError("script entry name '" + name + "' unknown");
      }
    }
    if (!phi_seen || !psi_seen) {
      throw UsageError("script key '" + key + "' must set phi and psi");
    }
    entries.push_back({static_cast<long>(*order), bit});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.order < b.order; });
  std::vector<protocol::BitScript> script;
  script.reserve(entries.size());
  for (const auto& e : entries) script.push_back(e.bit);
  return script;
}

std::string write_out(const GlobalOpts& g, const std::string& name,
                      const std::string& text) {
  std::filesystem::create_directories(g.out_dir);
  const auto path = std::filesystem::path(g.out_dir) / name;
  io::write_file(path.string(), text);
  return path.string();
}

std::string report_file_name(const GlobalOpts& g, const std::string& stem) {
  return stem + (g.format == "json" ? ".json" : ".txt");
}

struct SimulateArgs {
  std::optional<std::string> bits, trials;
  std::optional<std::string> script_path;
  std::optional<std::string> sifting;
  std::optional<std::string> init;
  std::optional<std::string> offset, jitter, detector, tol;
  std::optional<std::string> threads;
  bool transcript = false;
};

int run_simulate(const GlobalOpts& g, const SimulateArgs& a,
                 const std::optional<io::Config>& base_cfg, std::ostream& out) {
  std::optional<io::Config> script_cfg;
  if (a.script_path) script_cfg = io::Config::load(*a.script_path);

  harness::Scenario s;
  s.seed = g.seed;
  const io::Config* scen_src =
      base_cfg ? &*base_cfg : (script_cfg ? &*script_cfg : nullptr);
  if (scen_src) s = scenario_from_config(*scen_src, s);
  if (g.seed_given) s.seed = g.seed;

  s.n_bits = count_or(a.bits, s.n_bits, "--bits");
  s.trials = count_or(a.trials, s.trials, "--trials");
  if (a.sifting) s.sifting = need_on_off(*a.sifting, "--sifting");
  if (a.init) s.init_policy = init_policy_from(*a.init);
  s.channel.static_offset =
      phase_or(a.offset, s.channel.static_offset, "--offset");
  s.channel.phase_jitter_sd =
      phase_or(a.jitter, s.channel.phase_jitter_sd, "--jitter");
  s.channel.detector_error_sd =
      phase_or(a.detector, s.channel.detector_error_sd, "--detector");
  s.tol = phase_or(a.tol, s.tol, "--tol");
  s.threads = static_cast<unsigned>(count_or(a.threads, s.threads, "--threads"));

  const io::Config* script_src =
      script_cfg ? &*script_cfg : (base_cfg ? &*base_cfg : nullptr);
  std::vector<protocol::BitScript> script;
  if (script_src) script = script_from_config(*script_src);
  if (a.script_path && script.empty()) {
    throw harness::ScenarioError("script file has no [script] entries");
  }

  if (!script.empty()) {
    if (a.bits && s.n_bits != script.size()) {
      throw UsageError("--bits disagrees with the script length");
    }
    harness::validate(s);
    protocol::SessionOptions opts;
    opts.sifting = s.sifting;
    opts.script = &script;
    const auto tr =
        protocol::run_session(script.size(), s.channel, s.tol, s.seed, opts);
    out << "wrote " << write_out(g, "transcript.jsonl", protocol::serialize(tr))
        << "\n";
    out << "announced = " << tr.announcements.size() << "\n";
    out << "m_alice = " << protocol::digits(tr.final_alice) << "\n";
    out << "m_bob = " << protocol::digits(tr.final_bob) << "\n";
    return tr.final_alice == tr.final_bob ? 0 : 3;
  }

  protocol::SessionTranscript tr;
  const auto rep =
      harness::run_monte_carlo(s, a.transcript ? &tr : nullptr);
  out << harness::report_text(rep);
  const std::string name = report_file_name(g, "report");
  out << "wrote "
      << write_out(g, name,
                   g.format == "json" ? harness::report_json(rep)
                                      : harness::report_text(rep))
      << "\n";
  if (a.transcript) {
    out << "wrote "
        << write_out(g, "transcript.jsonl", protocol::serialize(tr)) << "\n";
  }
  return rep.agreement_failures > 0 ? 3 : 0;
}

struct BerMapArgs {
  std::optional<std::string> res;
  std::optional<std::string> phi_min, phi_max, psi_min, psi_max;
};

int run_ber_map(const GlobalOpts& g, const BerMapArgs& a, std::ostream& out) {
  const std::size_t res = count_or(a.res, 181, "--res");
  const double phi_min = phase_or(a.phi_min, 0.0, "--phi-min");
  const double phi_max = phase_or(a.phi_max, kPi, "--phi-max");
  const double psi_min = phase_or(a.psi_min, 0.0, "--psi-min");
  const double psi_max = phase_or(a.psi_max, kPi, "--psi-max");
  const auto grid =
      harness::ber_map({phi_min, phi_max}, {psi_min, psi_max}, res);
  const std::string name =
      g.format == "json" ? "ber_map.json" : "ber_map.csv";
  const std::string text = g.format == "json" ? harness::ber_map_json(grid)
                                              : harness::ber_map_csv(grid);
  out << "wrote " << write_out(g, name, text) << "\n";
  return 0;
}

struct CurvesArgs {
  std::vector<std::string> which;
  std::optional<std::string> min, max, step;
};

int run_curves(const GlobalOpts& g, const CurvesArgs& a, std::ostream& out) {
  std::vector<std::string> names = a.which;
  if (names.empty()) names = {"v56", "v34", "in34", "in78"};
  const double lo = phase_or(a.min, 0.0, "--min");
  const double hi = phase_or(a.max, 2.0 * kPi, "--max");
  double step = 0.01;
  if (a.step) {
    const auto v = io::parse_double(*a.step);
    if (!v || !(*v > 0.0)) throw UsageError("bad --step '" + *a.step + "'");
    step = *v;
  }
  for (const auto& name : names) {
    const auto curve =
        harness::fringe_curves(harness::curve_from_name(name), {lo, hi}, step);
    const std::string file = "curve_" + name +
                             (g.format == "json" ? ".json" : ".csv");
    const std::string text = g.format == "json" ? harness::curve_json(curve)
                                                : harness::curve_csv(curve);
    out << "wrote " << write_out(g, file, text) << "\n";
  }
  return 0;
}

struct AttackArgs {
  std::string strategy;
  std::optional<std::string> bits, trials, key_bits;
  std::optional<std::string> spread, theta, delta_prime;
  std::optional<std::string> sifting, tol;
  std::optional<std::string> threads;
};

int run_attack_eval(const GlobalOpts& g, const AttackArgs& a,
                    const std::optional<io::Config>& base_cfg,
                    std::ostream& out) {
  harness::Scenario s;
  s.seed = g.seed;
  s.n_bits = 64;
  if (base_cfg) s = scenario_from_config(*base_cfg, s);
  if (g.seed_given) s.seed = g.seed;

  const auto kind = strategy_from_name(a.strategy);
  if (!kind) throw UsageError("unknown strategy '" + a.strategy + "'");
  s.attack = *kind;
  s.n_bits = count_or(a.bits, s.n_bits, "--bits");
  s.trials = count_or(a.trials, s.trials, "--trials");
  s.memory_key_bits = count_or(a.key_bits, s.memory_key_bits, "--n");
  if (a.sifting) s.sifting = need_on_off(*a.sifting, "--sifting");
  s.tol = phase_or(a.tol, s.tol, "--tol");
  s.threads = static_cast<unsigned>(count_or(a.threads, s.threads, "--threads"));
  if (a.spread) {
    const auto v = io::parse_double(*a.spread);
    if (!v || *v < 0.0) throw UsageError("bad --spread '" + *a.spread + "'");
    s.disturbance.spread = *v;
  }
  if (a.theta) {
    s.disturbance.fixed = true;
    s.disturbance.theta = need_phase(*a.theta, "--theta");
  }
  if (a.delta_prime) {
    s.delta_prime = need_phase(*a.delta_prime, "--delta-prime");
  }

  const auto rep = harness::run_monte_carlo(s);
  out << harness::report_text(rep);
  const std::string name = report_file_name(g, "attack_report");
  out << "wrote "
      << write_out(g, name,
                   g.format == "json" ? harness::report_json(rep)
                                      : harness::report_text(rep))
      << "\n";
  return 0;
}

struct InitDemoArgs {
  std::optional<std::string> offset;
  std::optional<std::string> auth_rounds;
  std::optional<std::string> step;
  std::optional<std::string> jitter, detector;
};

int run_init_demo(const GlobalOpts& g, const InitDemoArgs& a,
                  const std::optional<io::Config>& base_cfg,
                  std::ostream& out) {
  channel::ChannelConfig cfg;
  if (base_cfg) {
    cfg.static_offset = base_cfg->get_double("channel.static_offset", 0.0);
    cfg.phase_jitter_sd = base_cfg->get_double("channel.phase_jitter_sd", 0.0);
    cfg.detector_error_sd =
        base_cfg->get_double("channel.detector_error_sd", 0.0);
  }
  if (a.offset && *a.offset != "random") {
    cfg.static_offset = need_phase(*a.offset, "--offset");
  } else if (!a.offset || *a.offset == "random") {
    std::mt19937_64 pick = rng::substream(g.seed, 0x0ff5e7);
    cfg.static_offset = rng::uniform(pick, 0.0, 2.0 * kPi);
  }
  cfg.phase_jitter_sd = phase_or(a.jitter, cfg.phase_jitter_sd, "--jitter");
  cfg.detector_error_sd =
      phase_or(a.detector, cfg.detector_error_sd, "--detector");

  init::InitOptions opts;
  if (a.step) {
    const auto v = io::parse_double(*a.step);
    if (!v || !(*v > 0.0)) throw UsageError("bad --step '" + *a.step + "'");
    opts.step = *v;
  }
  const std::size_t auth_rounds = count_or(a.auth_rounds, 20, "--auth-rounds");

  const init::InitState state = init::initialize(cfg, g.seed, opts);
  const double residual = std::remainder(cfg.static_offset + state.delta,
                                         2.0 * kPi);
  out << "channel_offset = " << io::format_double(cfg.static_offset) << "\n";
  out << "correction = " << io::format_double(state.delta) << "\n";
  out << "residual = " << io::format_double(residual) << "\n";
  out << "baseline_consistency = "
      << io::format_double(state.baseline_consistency) << "\n";
  out << "wrote " << write_out(g, "baseline.txt", init::save_state(state))
      << "\n";

  std::mt19937_64 clean_rng = rng::substream(g.seed, 1);
  const auto clean_rounds =
      init::run_init_rounds(auth_rounds, state.delta, cfg, clean_rng, opts.tol);
  const auto clean_verdict = init::authenticate(clean_rounds, state);
  out << "clean_verdict = "
      << (clean_verdict == init::AuthVerdict::clean ? "clean" : "suspect")
      << "\n";

  // Intercept-resend rehearsal: an interloper with independent calibration
  // shifts both legs by fresh uniform phases each round.
  std::mt19937_64 tamper_rng = rng::substream(g.seed, 2);
  std::mt19937_64 eve = rng::substream(~g.seed, 3);
  const auto tampered_rounds = init::run_init_rounds(
      auth_rounds, state.delta, cfg, tamper_rng, opts.tol,
      [&eve](std::size_t) {
        const double out_leg = rng::uniform(eve, 0.0, 2.0 * kPi);
        const double in_leg = rng::uniform(eve, 0.0, 2.0 * kPi);
        return std::pair<double, double>{out_leg, in_leg};
      });
  const auto tampered_verdict = init::authenticate(tampered_rounds, state);
  out << "intercept_verdict = "
      << (tampered_verdict == init::AuthVerdict::clean ? "clean" : "suspect")
      << "\n";
  return 0;
}

int run_replay(const GlobalOpts& g, const std::string& path,
               std::ostream& out) {
  (void)g;
  const std::string original = io::read_file(path);
  const protocol::SessionTranscript t = protocol::deserialize(original);

  protocol::SessionOptions opts;
  opts.sifting = t.sifting;
  opts.alice_trim = t.alice_trim;
  opts.alice_basis_origin = t.alice_basis_origin;
  if (t.scripted) opts.script = &t.script;
  const auto rerun =
      protocol::run_session(t.bits.size(), t.config, t.tol, t.seed, opts);
  const std::string regenerated = protocol::serialize(rerun);
  if (regenerated == original) {
    out << "replay = match\n";
    out << "m_alice = " << protocol::digits(rerun.final_alice) << "\n";
    out << "m_bob = " << protocol::digits(rerun.final_bob) << "\n";
    return 0;
  }
  out << "replay = mismatch\n";
  return 3;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"round-trip interferometric key distribution harness"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  std::string out_flag;
  std::string config_path;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--config", config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_flag,
                 "output directory (default: $MZIKD_OUT or .)");
  app.add_option("--format", g.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run key distribution sessions");
  sim_cmd->add_option("--bits", sim.bits, "bits per session");
  sim_cmd->add_option("--trials", sim.trials, "number of sessions");
  sim_cmd->add_option("--script", sim.script_path,
                      "config file with a [script] section")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--sifting", sim.sifting, "on|off");
  sim_cmd->add_option("--init", sim.init, "off|per-session|per-bit");
  sim_cmd->add_option("--offset", sim.offset, "static channel phase offset");
  sim_cmd->add_option("--jitter", sim.jitter, "phase jitter sd");
  sim_cmd->add_option("--detector", sim.detector, "detector noise sd");
  sim_cmd->add_option("--tol", sim.tol, "visibility classification tolerance");
  sim_cmd->add_option("--threads", sim.threads, "worker threads (0 = auto)");
  sim_cmd->add_flag("--transcript", sim.transcript,
                    "also write the first trial's transcript");

  BerMapArgs ber;
  auto* ber_cmd = app.add_subcommand("ber-map", "round-trip visibility grid");
  ber_cmd->add_option("--res", ber.res, "points per axis (default 181)");
  ber_cmd->add_option("--phi-min", ber.phi_min, "near-party phase start");
  ber_cmd->add_option("--phi-max", ber.phi_max, "near-party phase end");
  ber_cmd->add_option("--psi-min", ber.psi_min, "far-party phase start");
  ber_cmd->add_option("--psi-max", ber.psi_max, "far-party phase end");

  CurvesArgs cur;
  auto* cur_cmd = app.add_subcommand("curves", "standard fringe curves");
  cur_cmd->add_option("--which", cur.which,
                      "curve names: v56 v34 in34 in78 (default all)");
  cur_cmd->add_option("--min", cur.min, "phase start (default 0)");
  cur_cmd->add_option("--max", cur.max, "phase end (default 2pi)");
  cur_cmd->add_option("--step", cur.step, "phase step (default 0.01)");

  AttackArgs atk;
  auto* atk_cmd = app.add_subcommand("attack-eval", "adversary campaigns");
  atk_cmd
      ->add_option("--strategy", atk.strategy,
                   "passive|brute-force|memory|intercept")
      ->required();
  atk_cmd->add_option("--bits", atk.bits, "bits per session (default 64)");
  atk_cmd->add_option("--trials", atk.trials, "sessions (accepts 1e7)");
  atk_cmd->add_option("--n", atk.key_bits, "kept key length for memory runs");
  atk_cmd->add_option("--spread", atk.spread,
                      "intercept calibration spread, in units of pi");
  atk_cmd->add_option("--theta", atk.theta, "fixed intercept miscalibration");
  atk_cmd->add_option("--delta-prime", atk.delta_prime,
                      "informed analyzer offset for brute force");
  atk_cmd->add_option("--sifting", atk.sifting, "on|off");
  atk_cmd->add_option("--tol", atk.tol, "visibility classification tolerance");
  atk_cmd->add_option("--threads", atk.threads, "worker threads (0 = auto)");

  InitDemoArgs ini;
  auto* ini_cmd =
      app.add_subcommand("init-demo", "calibration scan and authentication");
  ini_cmd->add_option("--offset", ini.offset,
                      "true channel offset, or 'random' (default)");
  ini_cmd->add_option("--auth-rounds", ini.auth_rounds,
                      "verification rounds (default 20)");
  ini_cmd->add_option("--step", ini.step, "scan grid step");
  ini_cmd->add_option("--jitter", ini.jitter, "phase jitter sd");
  ini_cmd->add_option("--detector", ini.detector, "detector noise sd");

  std::string replay_path;
  auto* rep_cmd = app.add_subcommand("replay", "re-run a stored transcript");
  rep_cmd->add_option("transcript", replay_path, "transcript file")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  g.seed_given = app.count("--seed") > 0;
  g.out_dir = resolve_out_dir(out_flag);

  try {
    std::optional<io::Config> base_cfg;
    if (!config_path.empty()) base_cfg = io::Config::load(config_path);
    if (sim_cmd->parsed()) return run_simulate(g, sim, base_cfg, out);
    if (ber_cmd->parsed()) return run_ber_map(g, ber, out);
    if (cur_cmd->parsed()) return run_curves(g, cur, out);
    if (atk_cmd->parsed()) return run_attack_eval(g, atk, base_cfg, out);
    if (ini_cmd->parsed()) return run_init_demo(g, ini, base_cfg, out);
    if (rep_cmd->parsed()) return run_replay(g, replay_path, out);
    err << "error: no subcommand\n";
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int dispatch(const std::vector<std::string>& args) {
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace mzikd::cli
