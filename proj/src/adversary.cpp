#include "mzikd/adversary.hpp"

#include <cmath>
#include <stdexcept>

#include "mzikd/protocol.hpp"
#include "mzikd/rng.hpp"

namespace mzikd::adversary {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::passive_tap: return "passive-tap";
    case StrategyKind::brute_force: return "brute-force";
    case StrategyKind::memory: return "memory";
    case StrategyKind::intercept_resend: return "intercept-resend";
  }
  return "?";
}

PassiveTapResult passive_tap_guess(
    const std::vector<channel::TapObservation>& taps, std::mt19937_64& rng) {
  PassiveTapResult r;
  r.guesses.reserve(taps.size());
  double deviation = 0.0;
  for (const auto& t : taps) {
    deviation += std::abs(t.interference - 1.0);
    r.guesses.push_back(rng::coin(rng));
  }
  if (!taps.empty()) {
    r.off_basis_leak = deviation / static_cast<double>(taps.size()) > 0.25;
  }
  return r;
}

std::vector<int> brute_force_interferometer(
    double delta_prime, const std::vector<double>& fringe_phases,
    std::mt19937_64& rng) {
  std::vector<int> labels;
  labels.reserve(fringe_phases.size());
  for (double p : fringe_phases) {
    const double c = std::cos(p + delta_prime);
    if (std::abs(c) < 1e-12) {
      labels.push_back(rng::coin(rng));
    } else {
      labels.push_back(c > 0.0 ? 0 : 1);
    }
  }
  return labels;
}

MemoryCandidates memory_attack(const std::vector<int>& block) {
  MemoryCandidates c;
  c.guess = block;
  c.complement.reserve(block.size());
  for (int b : block) c.complement.push_back(1 - b);
  return c;
}

InterceptStats intercept_resend(std::size_t n_bits,
                                const DisturbanceModel& model,
                                const channel::ChannelConfig& cfg, double tol,
                                std::uint64_t seed) {
  std::mt19937_64 rng = rng::make_engine(seed);
  InterceptStats stats;
  stats.n_bits = n_bits;
  stats.eve_readings.reserve(n_bits);
  std::size_t correct = 0;

  for (std::size_t i = 0; i < n_bits; ++i) {
    auto [phi, x] = protocol::bob_prepare(rng);
    const double theta_out =
        model.fixed ? model.theta
                    : rng::uniform(rng, -model.spread * kPi, model.spread * kPi);
    const double theta_in =
        model.fixed ? model.theta
                    : rng::uniform(rng, -model.spread * kPi, model.spread * kPi);

    // Eve's own analyzer reading of the intercepted leg.
    const int reading = std::cos(phi + theta_out) >= 0.0 ? 0 : 1;
    stats.eve_readings.push_back(reading);
    if (reading == x.bit_value()) ++correct;

    // Re-emitted legs carry her offsets into the shared arm.
    channel::StagedFields staged =
        channel::propagate_outbound(phi, cfg, rng, theta_out);
    const auto v_a = channel::detect(staged.e56, cfg, rng).visibility;
    const protocol::KeySymbol y = protocol::alice_classify(v_a, tol);

    auto [psi, z] = protocol::alice_select(rng);
    channel::propagate_inbound(staged, psi + theta_in, cfg);
    const auto v_b = channel::detect(staged.e910, cfg, rng).visibility;
    const protocol::KeySymbol w = protocol::bob_classify(v_b, x, tol);

    if (y.is_raw() || w.is_raw()) ++stats.announced_errors;
  }

  if (n_bits > 0) {
    stats.announced_error_rate =
        static_cast<double>(stats.announced_errors) / static_cast<double>(n_bits);
    stats.eve_accuracy =
        static_cast<double>(correct) / static_cast<double>(n_bits);
  }
  return stats;
}

double eavesdrop_success_probability(int n_bits, KeyMode mode) {
  if (n_bits <= 0) {
    throw std::invalid_argument("eavesdrop_success_probability: n_bits < 1");
  }
  if (mode == KeyMode::unsifted) return 0.5;
  return std::ldexp(1.0, -n_bits);
}

}  // namespace mzikd::adversary
