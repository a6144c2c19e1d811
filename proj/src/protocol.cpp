#include "mzikd/protocol.hpp"

#include <cmath>

#include "json.hpp"
#include "mzikd/io.hpp"
#include "mzikd/rng.hpp"

namespace mzikd::protocol {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Basis bit encoded by a phase: 0 for the cos-positive half, 1 otherwise.
int bit_from_phase(double phase) {
  return std::cos(phase) >= 0.0 ? 0 : 1;
}

std::string symbol_text(const KeySymbol& s) {
  if (s.is_discard()) return "D";
  if (s.is_raw()) return io::format_double(s.raw_value());
  return s.bit_value() == 0 ? "0" : "1";
}

KeySymbol symbol_from_text(const std::string& t) {
  if (t == "D") return KeySymbol::discard();
  if (t == "0") return KeySymbol::bit(0);
  if (t == "1") return KeySymbol::bit(1);
  const auto v = io::parse_double(t);
  if (!v) throw ProtocolError("transcript: bad symbol '" + t + "'");
  return KeySymbol::raw(*v);
}

}  // namespace

KeySymbol KeySymbol::bit(int b) {
  if (b != 0 && b != 1) throw std::invalid_argument("KeySymbol: bit not 0/1");
  KeySymbol s;
  s.kind_ = b == 0 ? Kind::bit0 : Kind::bit1;
  return s;
}

KeySymbol KeySymbol::discard() { return KeySymbol{}; }

KeySymbol KeySymbol::raw(double v) {
  KeySymbol s;
  s.kind_ = Kind::raw;
  s.raw_ = v;
  return s;
}

int KeySymbol::bit_value() const {
  if (!is_bit()) throw std::logic_error("KeySymbol: not a bit");
  return kind_ == Kind::bit1 ? 1 : 0;
}

double KeySymbol::raw_value() const {
  if (!is_raw()) throw std::logic_error("KeySymbol: not raw");
  return raw_;
}

char KeySymbol::digit() const {
  switch (kind_) {
    case Kind::bit0: return '0';
    case Kind::bit1: return '1';
    default: return '9';
  }
}

bool operator==(const KeySymbol& a, const KeySymbol& b) {
  if (a.kind_ != b.kind_) return false;
  if (a.kind_ == KeySymbol::Kind::raw) return a.raw_ == b.raw_;
  return true;
}

std::string digits(const KeyStream& s) {
  std::string out;
  out.reserve(s.size());
  for (const auto& sym : s) out += sym.digit();
  return out;
}

std::pair<double, KeySymbol> bob_prepare(std::mt19937_64& rng) {
  const int x = rng::coin(rng);
  return {x == 0 ? 0.0 : kPi, KeySymbol::bit(x)};
}

KeySymbol alice_classify(const std::optional<double>& v_a, double tol) {
  if (!v_a) return KeySymbol::raw(0.0);
  if (std::abs(*v_a - 1.0) <= tol) return KeySymbol::bit(0);
  if (std::abs(*v_a + 1.0) <= tol) return KeySymbol::bit(1);
  return KeySymbol::raw(*v_a);
}

std::pair<double, KeySymbol> alice_select(std::mt19937_64& rng) {
  const int z = rng::coin(rng);
  return {z == 0 ? 0.0 : kPi, KeySymbol::bit(z)};
}

KeySymbol alice_sift(const KeySymbol& y, const KeySymbol& z) {
  if (y.is_bit() && z.is_bit() && y == z) return y;
  return KeySymbol::discard();
}

KeySymbol bob_classify(const std::optional<double>& v_b, const KeySymbol& x,
                       double tol) {
  if (!x.is_bit()) throw std::invalid_argument("bob_classify: x is not a bit");
  if (!v_b) return KeySymbol::raw(0.0);
  if (std::abs(*v_b + 1.0) <= tol) return x;            // round trip confirmed
  if (std::abs(*v_b - 1.0) <= tol) return KeySymbol::discard();  // basis mismatch
  return KeySymbol::raw(*v_b);
}

KeySymbol bob_sift(const KeySymbol& w, const KeySymbol& x) {
  if (w.is_bit() && x.is_bit() && w == x) return w;
  return KeySymbol::discard();
}

void reconcile(PartyState& alice, PartyState& bob,
               const std::vector<Announcement>& announcements) {
  if (alice.sifted.size() != bob.sifted.size()) {
    throw ProtocolError("reconcile: sifted stream length mismatch");
  }
  alice.final_key = alice.sifted;
  bob.final_key = bob.sifted;
  for (const auto& ann : announcements) {
    if (ann.index >= alice.final_key.size()) {
      throw ProtocolError("reconcile: announcement index out of range");
    }
    alice.final_key[ann.index] = KeySymbol::discard();
    bob.final_key[ann.index] = KeySymbol::discard();
  }
}

SessionTranscript run_session(std::size_t n_bits,
                              const channel::ChannelConfig& cfg, double tol,
                              std::uint64_t seed, const SessionOptions& opts) {
  const std::size_t n = opts.script ? opts.script->size() : n_bits;
  std::mt19937_64 rng = rng::make_engine(seed);

  SessionTranscript t;
  t.seed = seed;
  t.tol = tol;
  t.sifting = opts.sifting;
  t.config = cfg;
  t.config_digest = digest_of(cfg, tol, opts.sifting);
  if (opts.script) {
    t.scripted = true;
    t.script = *opts.script;
  }
  t.alice_trim = opts.alice_trim;
  t.alice_basis_origin = opts.alice_basis_origin;
  t.bits.reserve(n);

  PartyState alice{Party::alice, {}, {}, {}, {}, {}};
  PartyState bob{Party::bob, {}, {}, {}, {}, {}};

  for (std::size_t i = 0; i < n; ++i) {
    BitRecord rec;
    const BitScript* sc = opts.script ? &(*opts.script)[i] : nullptr;

    if (sc) {
      rec.phi = sc->phi;
      rec.x = KeySymbol::bit(bit_from_phase(sc->phi));
    } else {
      auto [phi, x] = bob_prepare(rng);
      rec.phi = phi;
      rec.x = x;
    }
    bob.bases.push_back(rec.phi);
    bob.own.push_back(rec.x);

    channel::StagedFields staged =
        channel::propagate_outbound(rec.phi, cfg, rng, opts.alice_trim);

    std::optional<double> v_a = channel::detect(staged.e56, cfg, rng).visibility;
    if (sc && sc->v_a_override) v_a = sc->v_a_override;
    rec.v_a_defined = v_a.has_value();
    rec.v_a = v_a.value_or(0.0);
    rec.y = alice_classify(v_a, tol);

    double psi_applied = 0.0;
    if (sc) {
      psi_applied = sc->psi;
      rec.z = KeySymbol::bit(bit_from_phase(sc->psi));
    } else if (opts.sifting) {
      auto [basis, z] = alice_select(rng);
      psi_applied = opts.alice_basis_origin + basis;
      rec.z = z;
    } else {
      // Sifting off: the far party echoes the basis she read, confirming
      // receipt instead of filtering.
      const int echo = rec.y.is_bit() ? rec.y.bit_value()
                                      : (rec.v_a >= 0.0 ? 0 : 1);
      psi_applied = opts.alice_basis_origin + (echo == 0 ? 0.0 : kPi);
      rec.z = KeySymbol::bit(echo);
    }
    rec.psi = psi_applied;
    alice.bases.push_back(psi_applied);
    alice.own.push_back(rec.z);

    rec.a = alice_sift(rec.y, rec.z);
    alice.copy.push_back(rec.y);
    alice.sifted.push_back(rec.a);

    channel::propagate_inbound(staged, psi_applied, cfg);
    std::optional<double> v_b = channel::detect(staged.e910, cfg, rng).visibility;
    if (sc && sc->v_b_override) v_b = sc->v_b_override;
    rec.v_b_defined = v_b.has_value();
    rec.v_b = v_b.value_or(0.0);
    rec.w = bob_classify(v_b, rec.x, tol);
    rec.b = bob_sift(rec.w, rec.x);
    bob.copy.push_back(rec.w);
    bob.sifted.push_back(rec.b);

    if (rec.y.is_raw()) t.announcements.push_back({i, Party::alice});
    if (rec.w.is_raw()) t.announcements.push_back({i, Party::bob});

    t.bits.push_back(rec);
  }

  reconcile(alice, bob, t.announcements);
  t.final_alice = alice.final_key;
  t.final_bob = bob.final_key;
  return t;
}

std::vector<std::size_t> kept_positions(const KeyStream& final_key) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < final_key.size(); ++i) {
    if (final_key[i].is_bit()) kept.push_back(i);
  }
  return kept;
}

std::string digest_of(const channel::ChannelConfig& cfg, double tol,
                      bool sifting) {
  std::string canon = "offset=" + io::format_double(cfg.static_offset) +
                      ";jitter=" + io::format_double(cfg.phase_jitter_sd) +
                      ";detector=" + io::format_double(cfg.detector_error_sd) +
                      ";chseed=" + std::to_string(cfg.seed) +
                      ";tol=" + io::format_double(tol) +
                      ";sifting=" + (sifting ? "1" : "0");
  return io::digest_hex(canon);
}

std::string serialize(const SessionTranscript& t) {
  using json = nlohmann::ordered_json;
  std::string out;
  for (std::size_t i = 0; i < t.bits.size(); ++i) {
    const BitRecord& r = t.bits[i];
    json rec;
    rec["index"] = i;
    rec["phi"] = r.phi;
    rec["psi"] = r.psi;
    rec["v_a"] = r.v_a;
    rec["v_a_defined"] = r.v_a_defined;
    rec["v_b"] = r.v_b;
    rec["v_b_defined"] = r.v_b_defined;
    rec["x"] = symbol_text(r.x);
    rec["y"] = symbol_text(r.y);
    rec["z"] = symbol_text(r.z);
    rec["a"] = symbol_text(r.a);
    rec["w"] = symbol_text(r.w);
    rec["b"] = symbol_text(r.b);
    out += rec.dump();
    out += "\n";
  }
  json footer;
  footer["announcements"] = json::array();
  for (const auto& ann : t.announcements) {
    footer["announcements"].push_back(
        {{"index", ann.index},
         {"party", ann.party == Party::alice ? "alice" : "bob"}});
  }
  footer["m_alice"] = digits(t.final_alice);
  footer["m_bob"] = digits(t.final_bob);
  footer["seed"] = t.seed;
  footer["tol"] = t.tol;
  footer["sifting"] = t.sifting;
  footer["config"] = {{"static_offset", t.config.static_offset},
                      {"phase_jitter_sd", t.config.phase_jitter_sd},
                      {"detector_error_sd", t.config.detector_error_sd},
                      {"seed", t.config.seed}};
  footer["alice_trim"] = t.alice_trim;
  footer["alice_basis_origin"] = t.alice_basis_origin;
  if (t.scripted) {
    footer["script"] = json::array();
    for (const auto& sc : t.script) {
      json entry;
      entry["phi"] = sc.phi;
      entry["psi"] = sc.psi;
      if (sc.v_a_override) entry["va"] = *sc.v_a_override;
      if (sc.v_b_override) entry["vb"] = *sc.v_b_override;
      footer["script"].push_back(entry);
    }
  }
  footer["digest"] = t.config_digest;
  out += footer.dump();
  out += "\n";
  return out;
}

SessionTranscript deserialize(const std::string& text) {
  using json = nlohmann::json;
  SessionTranscript t;
  bool footer_seen = false;
  for (const auto& line : io::split(text, '\n')) {
    if (io::trim(line).empty()) continue;
    json j = json::parse(line);
    if (j.contains("index")) {
      BitRecord r;
      r.phi = j.at("phi").get<double>();
      r.psi = j.at("psi").get<double>();
      r.v_a = j.at("v_a").get<double>();
      r.v_a_defined = j.at("v_a_defined").get<bool>();
      r.v_b = j.at("v_b").get<double>();
      r.v_b_defined = j.at("v_b_defined").get<bool>();
      r.x = symbol_from_text(j.at("x").get<std::string>());
      r.y = symbol_from_text(j.at("y").get<std::string>());
      r.z = symbol_from_text(j.at("z").get<std::string>());
      r.a = symbol_from_text(j.at("a").get<std::string>());
      r.w = symbol_from_text(j.at("w").get<std::string>());
      r.b = symbol_from_text(j.at("b").get<std::string>());
      t.bits.push_back(r);
    } else if (j.contains("digest")) {
      footer_seen = true;
      for (const auto& ann : j.at("announcements")) {
        t.announcements.push_back(
            {ann.at("index").get<std::size_t>(),
             ann.at("party").get<std::string>() == "alice" ? Party::alice
                                                           : Party::bob});
      }
      t.seed = j.at("seed").get<std::uint64_t>();
      t.tol = j.at("tol").get<double>();
      t.sifting = j.at("sifting").get<bool>();
      t.config.static_offset = j.at("config").at("static_offset").get<double>();
      t.config.phase_jitter_sd =
          j.at("config").at("phase_jitter_sd").get<double>();
      t.config.detector_error_sd =
          j.at("config").at("detector_error_sd").get<double>();
      t.config.seed = j.at("config").at("seed").get<std::uint64_t>();
      t.alice_trim = j.value("alice_trim", 0.0);
      t.alice_basis_origin = j.value("alice_basis_origin", 0.0);
      if (j.contains("script")) {
        t.scripted = true;
        for (const auto& entry : j.at("script")) {
          BitScript sc;
          sc.phi = entry.at("phi").get<double>();
          sc.psi = entry.at("psi").get<double>();
          if (entry.contains("va")) sc.v_a_override = entry.at("va").get<double>();
          if (entry.contains("vb")) sc.v_b_override = entry.at("vb").get<double>();
          t.script.push_back(sc);
        }
      }
      t.config_digest = j.at("digest").get<std::string>();
    } else {
      throw ProtocolError("transcript: unrecognized record");
    }
  }
  if (!footer_seen) throw ProtocolError("transcript: footer missing");
  // Final keys are not stored per symbol in the footer; rebuild them from
  // the per-bit records and the announcements.
  PartyState alice, bob;
  for (const auto& r : t.bits) {
    alice.sifted.push_back(r.a);
    bob.sifted.push_back(r.b);
  }
  reconcile(alice, bob, t.announcements);
  t.final_alice = alice.final_key;
  t.final_bob = bob.final_key;
  return t;
}

}  // namespace mzikd::protocol
