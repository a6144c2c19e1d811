/// Two-party key distribution over the round-trip channel.
///
/// Per bit: the near party (Bob) encodes a random basis phase phi in {0, pi};
/// the far party (Alice) reads the one-way visibility, copies the bit,
/// randomly re-encodes her own basis psi and returns the light; Bob reads
/// the round-trip visibility to confirm.  Both sides sift against their own
/// basis record and afterwards force every publicly announced error index
/// to the discard symbol.  Announcements carry error positions only; bases
/// and visibilities stay private.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mzikd/channel.hpp"

namespace mzikd::protocol {

/// Ternary key symbol: a bit, the discard marker D, or a raw visibility
/// reading kept verbatim when classification failed.
class KeySymbol {
 public:
  static KeySymbol bit(int b);
  static KeySymbol discard();
  static KeySymbol raw(double v);

  bool is_bit() const { return kind_ == Kind::bit0 || kind_ == Kind::bit1; }
  bool is_discard() const { return kind_ == Kind::discard; }
  bool is_raw() const { return kind_ == Kind::raw; }
  int bit_value() const;
  double raw_value() const;

  /// Compact digit: '0', '1' or '9' (discard and raw both map to '9'; raw
  /// values travel in a side list).
  char digit() const;

  friend bool operator==(const KeySymbol& a, const KeySymbol& b);
  friend bool operator!=(const KeySymbol& a, const KeySymbol& b) {
    return !(a == b);
  }

 private:
  enum class Kind { bit0, bit1, discard, raw };
  Kind kind_ = Kind::discard;
  double raw_ = 0.0;
};

using KeyStream = std::vector<KeySymbol>;

/// Digits of a stream in the compact 0/1/9 form.
std::string digits(const KeyStream& s);

enum class Party { alice, bob };

/// Public error announcement: position only.
struct Announcement {
  std::size_t index = 0;  // zero-based bit position
  Party party = Party::alice;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Random basis phase and the bit it encodes, for the near party.
std::pair<double, KeySymbol> bob_prepare(std::mt19937_64& rng);

/// Far-party classification of a one-way visibility: +1 -> 0, -1 -> 1
/// within tol, anything else (or undefined) kept raw.
KeySymbol alice_classify(const std::optional<double>& v_a, double tol);

/// Random return basis and the bit it encodes, for the far party.
std::pair<double, KeySymbol> alice_select(std::mt19937_64& rng);

/// Far-party sift: keep the copied bit when it equals the return-basis
/// bit, otherwise discard.  A raw copy never matches.
KeySymbol alice_sift(const KeySymbol& y, const KeySymbol& z);

/// Near-party classification of the round-trip visibility: -1 within tol
/// confirms his own bit, +1 within tol marks a basis mismatch (discard),
/// anything else kept raw.
KeySymbol bob_classify(const std::optional<double>& v_b, const KeySymbol& x,
                       double tol);

/// Near-party sift: keep the confirmed bit when it equals his own,
/// otherwise discard.
KeySymbol bob_sift(const KeySymbol& w, const KeySymbol& x);

struct PartyState {
  Party role = Party::alice;
  std::vector<double> bases;  // applied controller phases
  KeyStream own;              // {x} for Bob, {z} for Alice
  KeyStream copy;             // {w} for Bob, {y} for Alice
  KeyStream sifted;           // {b} / {a}
  KeyStream final_key;        // {m}
};

/// Force every announced index to D on both sides and fill final_key.
/// Both sifted streams must have equal length.
void reconcile(PartyState& alice, PartyState& bob,
               const std::vector<Announcement>& announcements);

/// Scripted per-bit drive: fixed bases and optional injected detector
/// readings that replace the simulated visibilities.
struct BitScript {
  double phi = 0.0;
  double psi = 0.0;
  std::optional<double> v_a_override;
  std::optional<double> v_b_override;
};

/// Per-bit record of everything both parties saw.
struct BitRecord {
  double phi = 0.0, psi = 0.0;
  double v_a = 0.0, v_b = 0.0;
  bool v_a_defined = true, v_b_defined = true;
  KeySymbol x, y, z, a, w, b;
};

struct SessionOptions {
  bool sifting = true;
  const std::vector<BitScript>* script = nullptr;  // overrides n_bits when set
  double alice_trim = 0.0;          // far-end outbound-path correction
  double alice_basis_origin = 0.0;  // return basis: bit0 -> origin, bit1 -> origin+pi
};

struct SessionTranscript {
  std::vector<BitRecord> bits;
  std::vector<Announcement> announcements;
  KeyStream final_alice;
  KeyStream final_bob;
  std::uint64_t seed = 0;
  double tol = 0.0;
  bool sifting = true;
  channel::ChannelConfig config;
  std::string config_digest;
  // Everything needed to re-run the session bit-exactly.
  bool scripted = false;
  std::vector<BitScript> script;
  double alice_trim = 0.0;
  double alice_basis_origin = 0.0;
};

/// Run one session of n_bits (or the script's length).  All randomness is
/// drawn from a fresh engine seeded with `seed`.
SessionTranscript run_session(std::size_t n_bits,
                              const channel::ChannelConfig& cfg, double tol,
                              std::uint64_t seed,
                              const SessionOptions& opts = {});

/// Positions whose final symbol is a bit.
std::vector<std::size_t> kept_positions(const KeyStream& final_key);

std::string digest_of(const channel::ChannelConfig& cfg, double tol,
                      bool sifting);

/// Transcript text form: one JSON record per bit, then a footer record
/// with announcements, final keys, seed and config digest.
std::string serialize(const SessionTranscript& t);
SessionTranscript deserialize(const std::string& text);

}  // namespace mzikd::protocol
