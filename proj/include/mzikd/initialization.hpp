/// Network initialization: the far party nulls the unknown channel bias
/// with a scanned correction phase, resolves the remaining half-turn
/// ambiguity through announced confirmation verdicts, and stores the round
/// record as a baseline for later re-authentication.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mzikd/channel.hpp"

namespace mzikd::init {

struct ScanError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One confirmation round.  phi and choice are party-private; v_a and the
/// verdict are the only announced values.
struct InitRound {
  double phi = 0.0;   // near-party basis phase
  int choice = 0;     // far-party encoding: 0 -> delta, 1 -> delta + pi
  double v_a = 0.0;   // announced one-way visibility
  double v_b = 0.0;   // near-party round-trip visibility (private)
  char verdict = 'X'; // announced: 'O' iff v_b = -1 within tol
};

/// Public projection of a round: what actually crosses the channel.
struct InitAnnouncement {
  double v_a = 0.0;
  char verdict = 'X';
};

std::vector<InitAnnouncement> public_view(const std::vector<InitRound>& rounds);
std::string serialize_announcements(const std::vector<InitAnnouncement>& anns);

struct InitOptions {
  double step = 1e-3;            // scan grid spacing, radians
  std::size_t test_bits = 16;    // probe bits per scan grid point
  std::size_t probe_rounds = 8;  // confirmation rounds for parity voting
  double tol = 0.01;             // visibility classification tolerance
};

/// Grid search of the correction phase: returns the delta in [0, 2pi)
/// maximizing the mean |V_A| over the probe bits.  Throws ScanError when
/// no grid point reaches mean |V_A| >= 1 - tol.
double scan_delta(const std::vector<double>& test_phis,
                  const channel::ChannelConfig& cfg, std::mt19937_64& rng,
                  const InitOptions& opts = {});

/// Optional per-round phase disturbance (outbound extra, inbound extra);
/// used to model line tampering during rounds.
using PhasePerturb = std::function<std::pair<double, double>(std::size_t)>;

/// One confirmation round at the given engaged correction.
InitRound init_round(double phi, int choice, double delta,
                     const channel::ChannelConfig& cfg, std::mt19937_64& rng,
                     double tol = 0.01, double extra_out = 0.0,
                     double extra_in = 0.0);

/// k rounds with random near-party bases and far-party choices.
std::vector<InitRound> run_init_rounds(std::size_t k, double delta,
                                       const channel::ChannelConfig& cfg,
                                       std::mt19937_64& rng, double tol = 0.01,
                                       PhasePerturb perturb = {});

/// Fraction of rounds whose announced verdict matches the far party's
/// prediction under the "correction aligned" hypothesis.
double verdict_consistency(const std::vector<InitRound>& rounds);

/// Majority vote between delta and delta + pi.  Throws ParityError when
/// the vote is within one round of a tie.
double resolve_parity(const std::vector<InitRound>& rounds, double delta);

/// Calibration record kept by the far party.
struct InitState {
  double delta = 0.0;
  bool parity_resolved = false;
  std::vector<InitRound> baseline_rounds;
  double baseline_consistency = 0.0;
  double baseline_mean_abs_v_a = 0.0;
};

/// Full procedure: scan, probe rounds, parity vote, verification rounds
/// (which become the stored baseline).
InitState initialize(const channel::ChannelConfig& cfg, std::uint64_t seed,
                     const InitOptions& opts = {});

enum class AuthVerdict { clean, suspect };

/// Re-run comparison against the stored baseline: suspect when the verdict
/// consistency or the mean |V_A| shifts beyond the threshold.
AuthVerdict authenticate(const std::vector<InitRound>& rounds,
                         const InitState& baseline, double threshold = 0.05);

/// Versioned text form of an InitState.
std::string save_state(const InitState& s);
InitState load_state(const std::string& text);

}  // namespace mzikd::init
