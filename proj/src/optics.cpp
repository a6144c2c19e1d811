#include "mzikd/optics.hpp"

#include <cmath>
#include <stdexcept>

#include "mzikd/io.hpp"

namespace mzikd::optics {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

Complex phase_factor(double phase) { return {std::cos(phase), std::sin(phase)}; }

}  // namespace

const char* stage_label(Stage s) {
  switch (s) {
    case Stage::e1: return "e1";
    case Stage::e34: return "e34";
    case Stage::e56: return "e56";
    case Stage::e78: return "e78";
    case Stage::e910: return "e910";
  }
  return "?";
}

FieldPair source_field() { return {Stage::e1, {1.0, 0.0}, {0.0, 0.0}}; }

OpticalTransform compose(const OpticalTransform& a, const OpticalTransform& b) {
  return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
          a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
}

OpticalTransform beam_splitter() {
  const Complex t{kInvSqrt2, 0.0};
  const Complex r{0.0, kInvSqrt2};
  return {t, r, r, t};
}

OpticalTransform phase_shifter(double phase) {
  if (!std::isfinite(phase)) {
    throw std::invalid_argument("phase_shifter: non-finite phase");
  }
  return {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, phase_factor(phase)};
}

OpticalTransform mzi_transform(double phase) {
  const OpticalTransform bs = beam_splitter();
  return compose(bs, compose(phase_shifter(phase), bs));
}

OpticalTransform round_trip_transform(double psi, double phi) {
  return compose(mzi_transform(psi), mzi_transform(phi));
}

FieldPair return_arm_fields(double phi, double psi) {
  if (!std::isfinite(phi) || !std::isfinite(psi)) {
    throw std::invalid_argument("return_arm_fields: non-finite phase");
  }
  return {Stage::e78, -kInvSqrt2 * phase_factor(phi),
          Complex{0.0, kInvSqrt2} * phase_factor(psi)};
}

FieldPair apply(const OpticalTransform& t, const FieldPair& f, Stage next) {
  return {next, t.m11 * f.upper + t.m12 * f.lower,
          t.m21 * f.upper + t.m22 * f.lower};
}

Measurement observe(const FieldPair& f) {
  Measurement m;
  m.intensity_upper = std::norm(f.upper);
  m.intensity_lower = std::norm(f.lower);
  const double total = m.intensity_upper + m.intensity_lower;
  if (total > 0.0) {
    m.visibility = (m.intensity_lower - m.intensity_upper) / total;
  }
  m.interference = std::norm(f.upper + f.lower);
  return m;
}

double visibility_surface(double phi, double psi) {
  const FieldPair ports =
      apply(round_trip_transform(psi, phi), source_field(), Stage::e910);
  return observe(ports).visibility.value();
}

bool is_unitary(const OpticalTransform& t, double tol) {
  // Rows of t * dagger(t) against the identity.
  const Complex d11 = t.m11 * std::conj(t.m11) + t.m12 * std::conj(t.m12);
  const Complex d12 = t.m11 * std::conj(t.m21) + t.m12 * std::conj(t.m22);
  const Complex d21 = t.m21 * std::conj(t.m11) + t.m22 * std::conj(t.m12);
  const Complex d22 = t.m21 * std::conj(t.m21) + t.m22 * std::conj(t.m22);
  return std::abs(d11 - 1.0) <= tol && std::abs(d12) <= tol &&
         std::abs(d21) <= tol && std::abs(d22 - 1.0) <= tol;
}

std::string dump(const FieldPair& f) {
  std::string out = "{\"stage\":\"";
  out += stage_label(f.stage);
  out += "\",\"upper\":[";
  out += io::format_double(f.upper.real());
  out += ",";
  out += io::format_double(f.upper.imag());
  out += "],\"lower\":[";
  out += io::format_double(f.lower.real());
  out += ",";
  out += io::format_double(f.lower.imag());
  out += "]}";
  return out;
}

}  // namespace mzikd::optics
