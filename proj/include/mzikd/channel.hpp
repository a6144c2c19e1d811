/// Shared interferometer channel between the two parties, with the noise
/// model and the two mid-line tap points an eavesdropper can reach.
///
/// Phase bookkeeping: the physical lower arm carries an unknown static bias
/// (static_offset), the sender's controller phase phi on the outbound pass
/// and the far party's controller phase on the return pass.  A per-bit
/// Gaussian jitter models the residual drift accumulated between the two
/// passes and is attributed to the outbound leg; biases common to both
/// passes cancel in the round-trip visibility.

#pragma once

#include <cstdint>
#include <random>

#include "mzikd/optics.hpp"

namespace mzikd::channel {

struct ChannelConfig {
  double static_offset = 0.0;     // unknown lower-arm path bias, radians
  double phase_jitter_sd = 0.0;   // per-bit differential phase drift, radians
  double detector_error_sd = 0.0; // additive intensity noise at detectors
  std::uint64_t seed = 0;         // noise stream identity, folded into digests
};

/// Field pairs of one bit at every stage of its round trip.
struct StagedFields {
  optics::FieldPair e1, e34, e56, e78, e910;
  double outbound_arm_phase = 0.0;  // total lower-arm phase of the outbound pass
  bool outbound_done = false;
  bool inbound_done = false;
};

/// Outbound pass: source -> mid-line (e34) -> far ports (e56).
/// far_trim is an additional lower-arm phase engaged at the far end
/// (0 when no calibration correction is in effect).
StagedFields propagate_outbound(double phi, const ChannelConfig& cfg,
                                std::mt19937_64& rng, double far_trim = 0.0);

/// Return pass: reflect e56, apply the far controller phase psi_total in the
/// mid-line (e78), then the near coupler (e910).  Requires the outbound pass.
void propagate_inbound(StagedFields& staged, double psi_total,
                       const ChannelConfig& cfg);

enum class TapPoint { mid_outbound, mid_inbound };

/// Everything a line tap yields: intensities plus the coherent-sum
/// intensity.  Complex amplitudes are deliberately not exposed.
struct TapObservation {
  TapPoint point = TapPoint::mid_outbound;
  double intensity_upper = 0.0;
  double intensity_lower = 0.0;
  double interference = 0.0;
};

/// Non-disturbing tap of a mid-line stage.  Throws if the stage has not
/// been propagated yet.
TapObservation tap(TapPoint point, const StagedFields& staged);

/// Concession hook for the strongest line attacker: the relative phase
/// between the arms of the outbound mid-line, modulo 2 pi.  No absolute
/// phase reference exists, so this is the most a coherent tap can read.
double outbound_relative_phase(const StagedFields& staged);

/// Detector readout: observe() with additive Gaussian intensity noise,
/// visibility recomputed from the noisy intensities and clamped to
/// [-1, 1].  Flagged undefined when the noisy total is at or below
/// 10 * detector_error_sd.
optics::Measurement detect(const optics::FieldPair& f, const ChannelConfig& cfg,
                           std::mt19937_64& rng);

}  // namespace mzikd::channel
