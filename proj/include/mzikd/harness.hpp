/// Scenario driver: repeated sessions with deterministic per-trial
/// substreams, attack campaigns, the visibility surface and the standard
/// fringe curves, plus text/JSON emitters for every artifact.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mzikd/adversary.hpp"
#include "mzikd/channel.hpp"
#include "mzikd/protocol.hpp"

namespace mzikd::harness {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class InitPolicy { off, per_session, per_bit };

struct Scenario {
  std::size_t n_bits = 1024;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  double tol = 0.01;
  bool sifting = true;
  InitPolicy init_policy = InitPolicy::off;
  channel::ChannelConfig channel;
  std::optional<adversary::StrategyKind> attack;
  adversary::DisturbanceModel disturbance;  // intercept-resend parameters
  std::optional<double> delta_prime;        // informed analyzer offset, if any
  std::size_t memory_key_bits = 12;         // sifted key length under attack
  unsigned threads = 0;                     // 0 -> hardware concurrency
};

struct RunReport {
  std::size_t trials = 0;
  std::size_t total_bits = 0;
  std::size_t kept_bits = 0;
  std::size_t error_bits = 0;  // positions with at least one announcement
  std::size_t agreement_failures = 0;
  double kept_rate = 0.0;
  double announced_error_rate = 0.0;
  std::optional<adversary::AttackReport> attack;
  double wall_seconds = 0.0;  // informational; excluded from serialized forms
};

/// Rejects inconsistent scenarios; notably per-bit initialization is only
/// meaningful when sifting is off.
void validate(const Scenario& s);

/// When first_transcript is non-null and the scenario runs plain protocol
/// sessions, the transcript of trial 0 is copied there.
RunReport run_monte_carlo(const Scenario& s,
                          protocol::SessionTranscript* first_transcript = nullptr);

/// Round-trip visibility sampled on a resolution x resolution grid,
/// row-major with phi as the outer loop.  Each row is {phi, psi, v}.
std::vector<std::array<double, 3>> ber_map(std::pair<double, double> phi_range,
                                           std::pair<double, double> psi_range,
                                           std::size_t resolution = 181);

enum class Curve { v56, v34, in34, in78 };

Curve curve_from_name(const std::string& name);
const char* curve_name(Curve c);

/// Sampled (phase, value) pairs of a standard observable, computed through
/// the transfer-matrix path rather than any closed form.
std::vector<std::pair<double, double>> fringe_curves(
    Curve c, std::pair<double, double> range, double step);

/// Deterministic parallel trial loop: fn(trial_index) must write only
/// trial-indexed state.
void for_each_trial(std::size_t trials, unsigned threads,
                    const std::function<void(std::size_t)>& fn);

std::string ber_map_csv(const std::vector<std::array<double, 3>>& grid);
std::string ber_map_json(const std::vector<std::array<double, 3>>& grid);
std::string curve_csv(const std::vector<std::pair<double, double>>& curve);
std::string curve_json(const std::vector<std::pair<double, double>>& curve);
std::string report_text(const RunReport& r);
std::string report_json(const RunReport& r);

}  // namespace mzikd::harness
