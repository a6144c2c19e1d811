/// Lossless 2x2 transfer-matrix optics for a fiber Mach-Zehnder
/// interferometer operated in both directions.
///
/// Conventions, fixed once and used everywhere:
///  - A field pair is the column vector (upper, lower).  "Upper" is the
///    transmitted arm seen from the source, "lower" the reflected arm.
///  - The beam splitter is symmetric 50:50 with the i factor on reflection.
///  - A phase shifter acts on the lower component only: diag(1, e^{i phase}).
///  - Intensities are in units of the source intensity I0 = 1.

#pragma once

#include <complex>
#include <optional>
#include <string>

namespace mzikd::optics {

using Complex = std::complex<double>;

/// Propagation stage of a field pair along the round trip.
enum class Stage { e1, e34, e56, e78, e910 };

const char* stage_label(Stage s);

/// Two coherent field amplitudes at one stage.
struct FieldPair {
  Stage stage = Stage::e1;
  Complex upper{0.0, 0.0};
  Complex lower{0.0, 0.0};
};

/// Source field (1, 0): unit amplitude in the upper arm.
FieldPair source_field();

/// 2x2 complex transfer matrix.
struct OpticalTransform {
  Complex m11, m12, m21, m22;
};

/// Matrix product a*b (b applied first).
OpticalTransform compose(const OpticalTransform& a, const OpticalTransform& b);

/// Symmetric 50:50 beam splitter, (1/sqrt 2) [[1, i], [i, 1]].
OpticalTransform beam_splitter();

/// Lower-arm phase shifter diag(1, e^{i phase}).  Rejects non-finite phase.
OpticalTransform phase_shifter(double phase);

/// Full interferometer pass BS * PS(phase) * BS.
OpticalTransform mzi_transform(double phase);

/// Round trip: outbound pass with phi, return pass with psi,
/// i.e. mzi_transform(psi) * mzi_transform(phi).
OpticalTransform round_trip_transform(double psi, double phi);

/// Mid-channel fields of the return pass for a unit source input:
/// (1/sqrt 2) * (-e^{i phi}, i e^{i psi}).
FieldPair return_arm_fields(double phi, double psi);

/// Apply a transform to a field pair and tag the result with its new stage.
FieldPair apply(const OpticalTransform& t, const FieldPair& f, Stage next);

/// Intensities, normalized intensity difference and coherent-sum intensity
/// of a field pair.  visibility = (I_lower - I_upper) / (I_lower + I_upper);
/// it is undefined (nullopt) when both intensities vanish, never 0.
struct Measurement {
  double intensity_upper = 0.0;
  double intensity_lower = 0.0;
  std::optional<double> visibility;
  double interference = 0.0;  // |upper + lower|^2
};

Measurement observe(const FieldPair& f);

/// Round-trip visibility at the far ports as a function of the two
/// controller phases; computed through round_trip_transform + observe.
double visibility_surface(double phi, double psi);

/// True when t * conj-transpose(t) is the identity within tol.
bool is_unitary(const OpticalTransform& t, double tol = 1e-12);

/// Diagnostic text form of a field pair: stage label plus re/im pairs at
/// full precision.
std::string dump(const FieldPair& f);

}  // namespace mzikd::optics
