#include "mzikd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mzikd/rng.hpp"

namespace mzikd::channel {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

double wrap_2pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

}  // namespace

StagedFields propagate_outbound(double phi, const ChannelConfig& cfg,
                                std::mt19937_64& rng, double far_trim) {
  if (!std::isfinite(phi)) {
    throw std::invalid_argument("propagate_outbound: non-finite phase");
  }
  StagedFields staged;
  staged.e1 = optics::source_field();
  const double jitter = rng::gaussian(rng, cfg.phase_jitter_sd);
  staged.outbound_arm_phase = phi + cfg.static_offset + far_trim + jitter;

  const optics::OpticalTransform bs = optics::beam_splitter();
  const optics::FieldPair split =
      optics::apply(bs, staged.e1, optics::Stage::e34);
  staged.e34 = optics::apply(optics::phase_shifter(staged.outbound_arm_phase),
                             split, optics::Stage::e34);
  staged.e56 = optics::apply(bs, staged.e34, optics::Stage::e56);
  staged.outbound_done = true;
  return staged;
}

void propagate_inbound(StagedFields& staged, double psi_total,
                       const ChannelConfig& cfg) {
  if (!staged.outbound_done) {
    throw std::logic_error("propagate_inbound: outbound pass missing");
  }
  if (!std::isfinite(psi_total)) {
    throw std::invalid_argument("propagate_inbound: non-finite phase");
  }
  // The same physical lower arm is traversed again, so the static bias
  // reappears; the outbound-attributed jitter does not.
  const double inbound_arm_phase = psi_total + cfg.static_offset;
  const optics::OpticalTransform bs = optics::beam_splitter();
  const optics::FieldPair reflected =
      optics::apply(bs, staged.e56, optics::Stage::e78);
  staged.e78 = optics::apply(optics::phase_shifter(inbound_arm_phase),
                             reflected, optics::Stage::e78);
  staged.e910 = optics::apply(bs, staged.e78, optics::Stage::e910);
  staged.inbound_done = true;
}

TapObservation tap(TapPoint point, const StagedFields& staged) {
  const optics::FieldPair* f = nullptr;
  if (point == TapPoint::mid_outbound) {
    if (!staged.outbound_done) throw std::logic_error("tap: no outbound fields");
    f = &staged.e34;
  } else {
    if (!staged.inbound_done) throw std::logic_error("tap: no inbound fields");
    f = &staged.e78;
  }
  const optics::Measurement m = optics::observe(*f);
  return {point, m.intensity_upper, m.intensity_lower, m.interference};
}

double outbound_relative_phase(const StagedFields& staged) {
  if (!staged.outbound_done) {
    throw std::logic_error("outbound_relative_phase: no outbound fields");
  }
  return wrap_2pi(staged.outbound_arm_phase);
}

optics::Measurement detect(const optics::FieldPair& f, const ChannelConfig& cfg,
                           std::mt19937_64& rng) {
  optics::Measurement m = optics::observe(f);
  if (cfg.detector_error_sd > 0.0) {
    m.intensity_upper = std::max(
        0.0, m.intensity_upper + rng::gaussian(rng, cfg.detector_error_sd));
    m.intensity_lower = std::max(
        0.0, m.intensity_lower + rng::gaussian(rng, cfg.detector_error_sd));
  }
  const double total = m.intensity_upper + m.intensity_lower;
  if (total <= 10.0 * cfg.detector_error_sd) {
    m.visibility.reset();
  } else {
    const double v = (m.intensity_lower - m.intensity_upper) / total;
    m.visibility = std::clamp(v, -1.0, 1.0);
  }
  return m;
}

}  // namespace mzikd::channel
