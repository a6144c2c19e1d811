#include "mzikd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "json.hpp"
#include "mzikd/initialization.hpp"
#include "mzikd/io.hpp"
#include "mzikd/rng.hpp"

namespace mzikd::harness {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct TrialStats {
  std::size_t kept = 0;
  std::size_t errors = 0;
  std::size_t agreement_failures = 0;
};

std::size_t unique_announced(const protocol::SessionTranscript& t) {
  std::vector<char> seen(t.bits.size(), 0);
  std::size_t n = 0;
  for (const auto& a : t.announcements) {
    if (!seen[a.index]) {
      seen[a.index] = 1;
      ++n;
    }
  }
  return n;
}

TrialStats session_stats(const protocol::SessionTranscript& t) {
  TrialStats s;
  s.kept = protocol::kept_positions(t.final_alice).size();
  s.errors = unique_announced(t);
  if (t.final_alice != t.final_bob) s.agreement_failures = 1;
  return s;
}

/// One sifted session trimmed to exactly n_kept kept bits; returns false
/// when the raw-bit cap is hit (practically unreachable).
bool sifted_key(std::size_t n_kept, const channel::ChannelConfig& cfg,
                double tol, std::mt19937_64& rng, std::vector<int>& key) {
  key.clear();
  const std::size_t cap = 64 * (n_kept + 8);
  for (std::size_t raw = 0; raw < cap && key.size() < n_kept; ++raw) {
    auto [phi, x] = protocol::bob_prepare(rng);
    channel::StagedFields staged =
        channel::propagate_outbound(phi, cfg, rng, 0.0);
    const auto v_a = channel::detect(staged.e56, cfg, rng).visibility;
    const protocol::KeySymbol y = protocol::alice_classify(v_a, tol);
    auto [psi, z] = protocol::alice_select(rng);
    const protocol::KeySymbol a = protocol::alice_sift(y, z);
    channel::propagate_inbound(staged, psi, cfg);
    const auto v_b = channel::detect(staged.e910, cfg, rng).visibility;
    const protocol::KeySymbol w = protocol::bob_classify(v_b, x, tol);
    const protocol::KeySymbol b = protocol::bob_sift(w, x);
    if (y.is_raw() || w.is_raw()) continue;  // announced on both sides
    if (a.is_bit() && b.is_bit() && a == b) key.push_back(a.bit_value());
  }
  return key.size() == n_kept;
}

adversary::AttackReport eval_passive(const Scenario& s) {
  adversary::AttackReport rep;
  rep.strategy = adversary::StrategyKind::passive_tap;
  rep.trials = s.trials;
  rep.n_bits = s.n_bits;
  std::vector<std::array<std::size_t, 2>> per_trial(s.trials, {0, 0});
  for_each_trial(s.trials, s.threads, [&](std::size_t t) {
    std::mt19937_64 rng = rng::substream(s.seed, t);
    std::mt19937_64 eve = rng::substream(~s.seed, t);
    std::vector<channel::TapObservation> taps;
    std::vector<int> x;
    taps.reserve(s.n_bits);
    for (std::size_t i = 0; i < s.n_bits; ++i) {
      auto [phi, xb] = protocol::bob_prepare(rng);
      const channel::StagedFields staged =
          channel::propagate_outbound(phi, s.channel, rng, 0.0);
      taps.push_back(channel::tap(channel::TapPoint::mid_outbound, staged));
      x.push_back(xb.bit_value());
    }
    const auto res = adversary::passive_tap_guess(taps, eve);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (res.guesses[i] == x[i]) ++hits;
    }
    per_trial[t] = {hits, hits == x.size() ? std::size_t{1} : std::size_t{0}};
  });
  std::size_t hits = 0, blocks = 0;
  for (const auto& p : per_trial) {
    hits += p[0];
    blocks += p[1];
  }
  const double total = static_cast<double>(s.trials) * static_cast<double>(s.n_bits);
  if (total > 0) rep.per_bit_success = static_cast<double>(hits) / total;
  if (s.trials > 0) {
    rep.block_success = static_cast<double>(blocks) / static_cast<double>(s.trials);
  }
  rep.eta_analytic = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(s.n_bits, 1074)));
  return rep;
}

adversary::AttackReport eval_brute_force(const Scenario& s) {
  adversary::AttackReport rep;
  rep.strategy = adversary::StrategyKind::brute_force;
  rep.trials = s.trials;
  rep.n_bits = s.n_bits;
  // per trial: {per-bit hits, exact block, consistent block}
  std::vector<std::array<std::size_t, 3>> per_trial(s.trials, {0, 0, 0});
  for_each_trial(s.trials, s.threads, [&](std::size_t t) {
    std::mt19937_64 rng = rng::substream(s.seed, t);
    std::mt19937_64 eve = rng::substream(~s.seed, t);
    std::vector<double> fringes;
    std::vector<int> x;
    fringes.reserve(s.n_bits);
    for (std::size_t i = 0; i < s.n_bits; ++i) {
      auto [phi, xb] = protocol::bob_prepare(rng);
      const channel::StagedFields staged =
          channel::propagate_outbound(phi, s.channel, rng, 0.0);
      fringes.push_back(channel::outbound_relative_phase(staged));
      x.push_back(xb.bit_value());
    }
    const double delta_prime =
        s.delta_prime ? *s.delta_prime : rng::uniform(eve, 0.0, 2.0 * kPi);
    const auto labels =
        adversary::brute_force_interferometer(delta_prime, fringes, eve);
    std::size_t hits = 0;
    bool exact = true, complemented = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (labels[i] == x[i]) ++hits;
      exact = exact && labels[i] == x[i];
      complemented = complemented && labels[i] == 1 - x[i];
    }
    per_trial[t] = {hits, exact ? std::size_t{1} : std::size_t{0},
                    (exact || complemented) ? std::size_t{1} : std::size_t{0}};
  });
  std::size_t hits = 0, exact = 0, consistent = 0;
  for (const auto& p : per_trial) {
    hits += p[0];
    exact += p[1];
    consistent += p[2];
  }
  const double total = static_cast<double>(s.trials) * static_cast<double>(s.n_bits);
  if (total > 0) rep.per_bit_success = static_cast<double>(hits) / total;
  if (s.trials > 0) {
    rep.block_success = static_cast<double>(exact) / static_cast<double>(s.trials);
    // Detection never triggers: the tap does not disturb the line, so the
    // only signal is the block recovery statistics themselves.
    rep.detection_rate = 0.0;
    rep.eta_analytic = adversary::eavesdrop_success_probability(
        1, adversary::KeyMode::unsifted);
    rep.consistent_rate =
        static_cast<double>(consistent) / static_cast<double>(s.trials);
  }
  return rep;
}

adversary::AttackReport eval_memory(const Scenario& s) {
  adversary::AttackReport rep;
  rep.strategy = adversary::StrategyKind::memory;
  rep.trials = s.trials;
  if (!s.sifting) {
    // Unsifted blocks: the consistent labeling plus its complement always
    // covers the key, so the campaign reduces to the brute-force one.
    Scenario bf = s;
    bf.attack = adversary::StrategyKind::brute_force;
    const auto base = eval_brute_force(bf);
    rep.n_bits = s.n_bits;
    rep.per_bit_success = base.per_bit_success;
    rep.block_success = base.consistent_rate;  // one of two candidates hits
    rep.eta_analytic = 1.0;
    return rep;
  }
  rep.n_bits = s.memory_key_bits;
  std::vector<std::array<std::size_t, 2>> per_trial(s.trials, {0, 0});
  for_each_trial(s.trials, s.threads, [&](std::size_t t) {
    std::mt19937_64 rng = rng::substream(s.seed, t);
    std::mt19937_64 eve = rng::substream(~s.seed, t);
    std::vector<int> key;
    if (!sifted_key(s.memory_key_bits, s.channel, s.tol, rng, key)) return;
    std::vector<int> guess(key.size());
    for (auto& g : guess) g = rng::coin(eve);
    const auto cands = adversary::memory_attack(guess);
    std::size_t hits = 0;
    bool direct = true, flipped = true;
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (cands.guess[i] == key[i]) ++hits;
      direct = direct && cands.guess[i] == key[i];
      flipped = flipped && cands.complement[i] == key[i];
    }
    per_trial[t] = {hits, (direct || flipped) ? std::size_t{1} : std::size_t{0}};
  });
  std::size_t hits = 0, blocks = 0;
  for (const auto& p : per_trial) {
    hits += p[0];
    blocks += p[1];
  }
  const double total =
      static_cast<double>(s.trials) * static_cast<double>(s.memory_key_bits);
  if (total > 0) rep.per_bit_success = static_cast<double>(hits) / total;
  if (s.trials > 0) {
    rep.block_success = static_cast<double>(blocks) / static_cast<double>(s.trials);
  }
  // Analytic chance per candidate; Eve holds two, so block_success should
  // land near twice this value.
  rep.eta_analytic = adversary::eavesdrop_success_probability(
      static_cast<int>(s.memory_key_bits), adversary::KeyMode::sifted);
  return rep;
}

adversary::AttackReport eval_intercept(const Scenario& s) {
  adversary::AttackReport rep;
  rep.strategy = adversary::StrategyKind::intercept_resend;
  rep.trials = s.trials;
  rep.n_bits = s.n_bits;
  std::vector<std::array<double, 2>> acc(s.trials, {0.0, 0.0});
  std::vector<char> detected(s.trials, 0);
  for_each_trial(s.trials, s.threads, [&](std::size_t t) {
    const auto stats = adversary::intercept_resend(
        s.n_bits, s.disturbance, s.channel, s.tol, rng::subseed(s.seed, t));
    acc[t] = {stats.eve_accuracy, stats.announced_error_rate};
    detected[t] = stats.announced_errors > 0 ? 1 : 0;
  });
  double accuracy = 0.0, err_rate = 0.0;
  std::size_t det = 0;
  for (std::size_t t = 0; t < s.trials; ++t) {
    accuracy += acc[t][0];
    err_rate += acc[t][1];
    det += detected[t];
  }
  if (s.trials > 0) {
    rep.per_bit_success = accuracy / static_cast<double>(s.trials);
    rep.block_success = err_rate / static_cast<double>(s.trials);  // mean announced rate
    rep.detection_rate = static_cast<double>(det) / static_cast<double>(s.trials);
  }
  return rep;
}

}  // namespace

void validate(const Scenario& s) {
  if (s.n_bits == 0) throw ScenarioError("scenario: n_bits must be positive");
  if (!(s.tol > 0.0 && s.tol < 1.0)) {
    throw ScenarioError("scenario: tol must lie in (0, 1)");
  }
  if (s.channel.phase_jitter_sd < 0.0 || s.channel.detector_error_sd < 0.0) {
    throw ScenarioError("scenario: negative noise level");
  }
  if (s.init_policy == InitPolicy::per_bit && s.sifting) {
    throw ScenarioError(
        "scenario: per-bit initialization requires sifting off");
  }
  if (s.attack == adversary::StrategyKind::memory && s.sifting &&
      s.memory_key_bits == 0) {
    throw ScenarioError("scenario: memory attack needs a key length");
  }
}

RunReport run_monte_carlo(const Scenario& s,
                          protocol::SessionTranscript* first_transcript) {
  validate(s);
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.trials = s.trials;
  if (s.trials == 0) return rep;

  if (!s.attack) {
    std::vector<TrialStats> per_trial(s.trials);
    for_each_trial(s.trials, s.threads, [&](std::size_t t) {
      channel::ChannelConfig cfg = s.channel;
      protocol::SessionOptions opts;
      opts.sifting = s.sifting;
      if (s.init_policy == InitPolicy::per_session) {
        const init::InitState state =
            init::initialize(cfg, rng::subseed(~s.seed, t));
        opts.alice_trim = state.delta;
        opts.alice_basis_origin = state.delta;
      } else if (s.init_policy == InitPolicy::per_bit) {
        // Net effect of a fresh re-initialization before every bit: the
        // engaged correction cancels the bias exactly for each bit.
        opts.alice_trim = -cfg.static_offset;
        opts.alice_basis_origin = -cfg.static_offset;
      }
      const auto t_script = protocol::run_session(
          s.n_bits, cfg, s.tol, rng::subseed(s.seed, t), opts);
      if (t == 0 && first_transcript) *first_transcript = t_script;
      per_trial[t] = session_stats(t_script);
    });
    for (const auto& st : per_trial) {
      rep.kept_bits += st.kept;
      rep.error_bits += st.errors;
      rep.agreement_failures += st.agreement_failures;
    }
    rep.total_bits = s.trials * s.n_bits;
    rep.kept_rate =
        static_cast<double>(rep.kept_bits) / static_cast<double>(rep.total_bits);
    rep.announced_error_rate =
        static_cast<double>(rep.error_bits) / static_cast<double>(rep.total_bits);
  } else {
    switch (*s.attack) {
      case adversary::StrategyKind::passive_tap: rep.attack = eval_passive(s); break;
      case adversary::StrategyKind::brute_force: rep.attack = eval_brute_force(s); break;
      case adversary::StrategyKind::memory: rep.attack = eval_memory(s); break;
      case adversary::StrategyKind::intercept_resend:
        rep.attack = eval_intercept(s);
        break;
    }
    rep.total_bits = s.trials * rep.attack->n_bits;
  }

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rep;
}

std::vector<std::array<double, 3>> ber_map(std::pair<double, double> phi_range,
                                           std::pair<double, double> psi_range,
                                           std::size_t resolution) {
  if (resolution < 2) throw ScenarioError("ber_map: resolution must be >= 2");
  std::vector<std::array<double, 3>> grid;
  grid.reserve(resolution * resolution);
  const double dphi =
      (phi_range.second - phi_range.first) / static_cast<double>(resolution - 1);
  const double dpsi =
      (psi_range.second - psi_range.first) / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    const double phi = phi_range.first + static_cast<double>(i) * dphi;
    for (std::size_t j = 0; j < resolution; ++j) {
      const double psi = psi_range.first + static_cast<double>(j) * dpsi;
      grid.push_back({phi, psi, optics::visibility_surface(phi, psi)});
    }
  }
  return grid;
}

Curve curve_from_name(const std::string& name) {
  if (name == "v56") return Curve::v56;
  if (name == "v34") return Curve::v34;
  if (name == "in34") return Curve::in34;
  if (name == "in78") return Curve::in78;
  throw ScenarioError("unknown curve '" + name + "'");
}

const char* curve_name(Curve c) {
  switch (c) {
    case Curve::v56: return "v56";
    case Curve::v34: return "v34";
    case Curve::in34: return "in34";
    case Curve::in78: return "in78";
  }
  return "?";
}

std::vector<std::pair<double, double>> fringe_curves(
    Curve c, std::pair<double, double> range, double step) {
  if (step <= 0.0) throw ScenarioError("fringe_curves: step must be positive");
  std::vector<std::pair<double, double>> out;
  const optics::OpticalTransform bs = optics::beam_splitter();
  for (double x = range.first; x <= range.second + 0.5 * step; x += step) {
    double value = 0.0;
    switch (c) {
      case Curve::v56: {
        const auto ports = optics::apply(optics::mzi_transform(x),
                                         optics::source_field(),
                                         optics::Stage::e56);
        value = optics::observe(ports).visibility.value();
        break;
      }
      case Curve::v34:
      case Curve::in34: {
        const auto split =
            optics::apply(bs, optics::source_field(), optics::Stage::e34);
        const auto mid = optics::apply(optics::phase_shifter(x), split,
                                       optics::Stage::e34);
        const auto m = optics::observe(mid);
        value = c == Curve::v34 ? m.visibility.value() : m.interference;
        break;
      }
      case Curve::in78: {
        value = optics::observe(optics::return_arm_fields(0.0, x)).interference;
        break;
      }
    }
    out.emplace_back(x, value);
  }
  return out;
}

void for_each_trial(std::size_t trials, unsigned threads,
                    const std::function<void(std::size_t)>& fn) {
  if (trials == 0) return;
  unsigned n = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (n == 0) n = 1;
  n = static_cast<unsigned>(
      std::min<std::size_t>(n, trials));
  if (n == 1) {
    for (std::size_t t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < trials; t += n) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

std::string ber_map_csv(const std::vector<std::array<double, 3>>& grid) {
  std::string out = "phi,psi,visibility\n";
  for (const auto& row : grid) {
    out += io::format_double(row[0]);
    out += ',';
    out += io::format_double(row[1]);
    out += ',';
    out += io::format_double(row[2]);
    out += '\n';
  }
  return out;
}

std::string ber_map_json(const std::vector<std::array<double, 3>>& grid) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& row : grid) {
    j.push_back({{"phi", row[0]}, {"psi", row[1]}, {"visibility", row[2]}});
  }
  return j.dump() + "\n";
}

std::string curve_csv(const std::vector<std::pair<double, double>>& curve) {
  std::string out = "phase,value\n";
  for (const auto& [x, v] : curve) {
    out += io::format_double(x);
    out += ',';
    out += io::format_double(v);
    out += '\n';
  }
  return out;
}

std::string curve_json(const std::vector<std::pair<double, double>>& curve) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& [x, v] : curve) j.push_back({{"phase", x}, {"value", v}});
  return j.dump() + "\n";
}

std::string report_text(const RunReport& r) {
  std::string out;
  out += "trials = " + std::to_string(r.trials) + "\n";
  out += "total_bits = " + std::to_string(r.total_bits) + "\n";
  if (!r.attack) {
    out += "kept_bits = " + std::to_string(r.kept_bits) + "\n";
    out += "kept_rate = " + io::format_double(r.kept_rate) + "\n";
    out += "error_bits = " + std::to_string(r.error_bits) + "\n";
    out += "announced_error_rate = " + io::format_double(r.announced_error_rate) + "\n";
    out += "agreement_failures = " + std::to_string(r.agreement_failures) + "\n";
  } else {
    const auto& a = *r.attack;
    out += std::string("strategy = ") + adversary::strategy_name(a.strategy) + "\n";
    out += "attack_block_bits = " + std::to_string(a.n_bits) + "\n";
    out += "per_bit_success = " + io::format_double(a.per_bit_success) + "\n";
    out += "block_success = " + io::format_double(a.block_success) + "\n";
    out += "consistent_rate = " + io::format_double(a.consistent_rate) + "\n";
    out += "detection_rate = " + io::format_double(a.detection_rate) + "\n";
    out += "eta_analytic = " + io::format_double(a.eta_analytic) + "\n";
  }
  return out;
}

std::string report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["trials"] = r.trials;
  j["total_bits"] = r.total_bits;
  if (!r.attack) {
    j["kept_bits"] = r.kept_bits;
    j["kept_rate"] = r.kept_rate;
    j["error_bits"] = r.error_bits;
    j["announced_error_rate"] = r.announced_error_rate;
    j["agreement_failures"] = r.agreement_failures;
  } else {
    const auto& a = *r.attack;
    j["strategy"] = adversary::strategy_name(a.strategy);
    j["attack_block_bits"] = a.n_bits;
    j["per_bit_success"] = a.per_bit_success;
    j["block_success"] = a.block_success;
    j["consistent_rate"] = a.consistent_rate;
    j["detection_rate"] = a.detection_rate;
    j["eta_analytic"] = a.eta_analytic;
  }
  return j.dump(2) + "\n";
}

}  // namespace mzikd::harness
