#include "mzikd/initialization.hpp"

#include <cmath>
#include <cstdlib>

#include "mzikd/io.hpp"
#include "mzikd/rng.hpp"

namespace mzikd::init {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_2pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

double mean_abs_v_a(const std::vector<InitRound>& rounds) {
  if (rounds.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : rounds) sum += std::abs(r.v_a);
  return sum / static_cast<double>(rounds.size());
}

}  // namespace

std::vector<InitAnnouncement> public_view(const std::vector<InitRound>& rounds) {
  std::vector<InitAnnouncement> anns;
  anns.reserve(rounds.size());
  for (const auto& r : rounds) anns.push_back({r.v_a, r.verdict});
  return anns;
}

std::string serialize_announcements(const std::vector<InitAnnouncement>& anns) {
  std::string out;
  for (const auto& a : anns) {
    out += "v_a=" + io::format_double(a.v_a) + " verdict=" + a.verdict + "\n";
  }
  return out;
}

double scan_delta(const std::vector<double>& test_phis,
                  const channel::ChannelConfig& cfg, std::mt19937_64& rng,
                  const InitOptions& opts) {
  if (test_phis.empty()) throw ScanError("scan_delta: no test bits");
  if (opts.step <= 0.0) throw ScanError("scan_delta: non-positive step");
  const auto points = static_cast<std::size_t>(kTwoPi / opts.step);
  double best_delta = 0.0;
  double best_score = -1.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double delta = static_cast<double>(k) * opts.step;
    double sum = 0.0;
    for (double phi : test_phis) {
      const channel::StagedFields staged =
          channel::propagate_outbound(phi, cfg, rng, delta);
      const auto v = channel::detect(staged.e56, cfg, rng).visibility;
      if (v) sum += std::abs(*v);
    }
    const double score = sum / static_cast<double>(test_phis.size());
    if (score > best_score) {
      best_score = score;
      best_delta = delta;
    }
  }
  if (best_score < 1.0 - opts.tol) {
    throw ScanError("scan_delta: no grid point restores |V_A| within tolerance");
  }
  return best_delta;
}

InitRound init_round(double phi, int choice, double delta,
                     const channel::ChannelConfig& cfg, std::mt19937_64& rng,
                     double tol, double extra_out, double extra_in) {
  InitRound r;
  r.phi = phi;
  r.choice = choice;
  channel::StagedFields staged =
      channel::propagate_outbound(phi, cfg, rng, delta + extra_out);
  const auto v_a = channel::detect(staged.e56, cfg, rng).visibility;
  r.v_a = v_a.value_or(0.0);
  const double psi_total = delta + (choice == 0 ? 0.0 : kPi) + extra_in;
  channel::propagate_inbound(staged, psi_total, cfg);
  const auto v_b = channel::detect(staged.e910, cfg, rng).visibility;
  r.v_b = v_b.value_or(0.0);
  r.verdict = (v_b && std::abs(*v_b + 1.0) <= tol) ? 'O' : 'X';
  return r;
}

std::vector<InitRound> run_init_rounds(std::size_t k, double delta,
                                       const channel::ChannelConfig& cfg,
                                       std::mt19937_64& rng, double tol,
                                       PhasePerturb perturb) {
  std::vector<InitRound> rounds;
  rounds.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double phi = rng::coin(rng) == 0 ? 0.0 : kPi;
    const int choice = rng::coin(rng);
    double extra_out = 0.0, extra_in = 0.0;
    if (perturb) {
      const auto [out, in] = perturb(i);
      extra_out = out;
      extra_in = in;
    }
    rounds.push_back(
        init_round(phi, choice, delta, cfg, rng, tol, extra_out, extra_in));
  }
  return rounds;
}

double verdict_consistency(const std::vector<InitRound>& rounds) {
  if (rounds.empty()) return 0.0;
  std::size_t agree = 0;
  for (const auto& r : rounds) {
    // Aligned hypothesis: V_A = cos(phi), so the sign of the announced
    // reading identifies the near-party basis bit.
    const int inferred = r.v_a >= 0.0 ? 0 : 1;
    const char predicted = inferred == r.choice ? 'O' : 'X';
    if (predicted == r.verdict) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(rounds.size());
}

double resolve_parity(const std::vector<InitRound>& rounds, double delta) {
  if (rounds.empty()) throw ParityError("resolve_parity: no rounds");
  const auto n = static_cast<long>(rounds.size());
  const auto agree = static_cast<long>(
      std::lround(verdict_consistency(rounds) * static_cast<double>(n)));
  const long margin = 2 * agree - n;
  if (std::labs(margin) <= 2) {
    throw ParityError("resolve_parity: vote too close, demand more rounds");
  }
  return margin > 0 ? wrap_2pi(delta) : wrap_2pi(delta + kPi);
}

InitState initialize(const channel::ChannelConfig& cfg, std::uint64_t seed,
                     const InitOptions& opts) {
  std::mt19937_64 rng = rng::make_engine(seed);
  std::vector<double> test_phis;
  test_phis.reserve(opts.test_bits);
  for (std::size_t i = 0; i < opts.test_bits; ++i) {
    test_phis.push_back(rng::coin(rng) == 0 ? 0.0 : kPi);
  }
  const double scanned = scan_delta(test_phis, cfg, rng, opts);
  const auto probe =
      run_init_rounds(opts.probe_rounds, scanned, cfg, rng, opts.tol);
  const double resolved = resolve_parity(probe, scanned);

  InitState state;
  state.delta = resolved;
  state.parity_resolved = true;
  state.baseline_rounds =
      run_init_rounds(opts.probe_rounds, resolved, cfg, rng, opts.tol);
  state.baseline_consistency = verdict_consistency(state.baseline_rounds);
  state.baseline_mean_abs_v_a = mean_abs_v_a(state.baseline_rounds);
  if (state.baseline_consistency < 0.75) {
    throw ParityError("initialize: verification rounds stay inconsistent");
  }
  return state;
}

AuthVerdict authenticate(const std::vector<InitRound>& rounds,
                         const InitState& baseline, double threshold) {
  const double consistency = verdict_consistency(rounds);
  const double magnitude = mean_abs_v_a(rounds);
  if (std::abs(consistency - baseline.baseline_consistency) > threshold) {
    return AuthVerdict::suspect;
  }
  if (std::abs(magnitude - baseline.baseline_mean_abs_v_a) > threshold) {
    return AuthVerdict::suspect;
  }
  return AuthVerdict::clean;
}

std::string save_state(const InitState& s) {
  std::string out = "mzikd-baseline v1\n";
  out += "delta = " + io::format_double(s.delta) + "\n";
  out += "parity_resolved = " + std::string(s.parity_resolved ? "1" : "0") + "\n";
  out += "consistency = " + io::format_double(s.baseline_consistency) + "\n";
  out += "mean_abs_v_a = " + io::format_double(s.baseline_mean_abs_v_a) + "\n";
  out += "rounds = " + std::to_string(s.baseline_rounds.size()) + "\n";
  for (std::size_t i = 0; i < s.baseline_rounds.size(); ++i) {
    const InitRound& r = s.baseline_rounds[i];
    out += "round." + std::to_string(i + 1) + " = phi=" +
           io::format_double(r.phi) + " choice=" + std::to_string(r.choice) +
           " v_a=" + io::format_double(r.v_a) + " v_b=" +
           io::format_double(r.v_b) + " verdict=" + r.verdict + "\n";
  }
  return out;
}

InitState load_state(const std::string& text) {
  const auto nl = text.find('\n');
  if (nl == std::string::npos || io::trim(text.substr(0, nl)) != "mzikd-baseline v1") {
    throw std::runtime_error("baseline: unknown version header");
  }
  const io::Config cfg = io::Config::parse(text.substr(nl + 1));
  InitState s;
  s.delta = cfg.get_double("delta", 0.0);
  s.parity_resolved = cfg.get_bool("parity_resolved", false);
  s.baseline_consistency = cfg.get_double("consistency", 0.0);
  s.baseline_mean_abs_v_a = cfg.get_double("mean_abs_v_a", 0.0);
  const auto n = cfg.get_u64("rounds", 0);
  for (std::uint64_t i = 1; i <= n; ++i) {
    const std::string rec = cfg.get("round." + std::to_string(i), "");
    if (rec.empty()) throw std::runtime_error("baseline: missing round record");
    InitRound r;
    for (const auto& tok : io::split(rec, ' ')) {
      if (tok.empty()) continue;
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "phi") r.phi = *io::parse_double(val);
      else if (key == "choice") r.choice = static_cast<int>(*io::parse_double(val));
      else if (key == "v_a") r.v_a = *io::parse_double(val);
      else if (key == "v_b") r.v_b = *io::parse_double(val);
      else if (key == "verdict") r.verdict = val.empty() ? 'X' : val[0];
    }
    s.baseline_rounds.push_back(r);
  }
  return s;
}

}  // namespace mzikd::init
