#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <random>
#include <string>

#include "doctest.h"
#include "mzikd/optics.hpp"
#include "test_support.hpp"

using mzikd::optics::Complex;
using mzikd::optics::FieldPair;
using mzikd::optics::OpticalTransform;
using mzikd::optics::Stage;
using testsup::close;
using testsup::kPi;

namespace {

const Complex kI(0.0, 1.0);

bool mat_close(const OpticalTransform& t, const testsup::Mat2& r, double tol) {
  return close(t.m11, r.m11, tol) && close(t.m12, r.m12, tol) &&
         close(t.m21, r.m21, tol) && close(t.m22, r.m22, tol);
}

double norm2(const FieldPair& f) {
  return std::norm(f.upper) + std::norm(f.lower);
}

}  // namespace

TEST_CASE("beam splitter matrix is the symmetric 50:50 form") {
  const auto bs = mzikd::optics::beam_splitter();
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(close(bs.m11, Complex(s, 0.0), 1e-15));
  CHECK(close(bs.m12, s * kI, 1e-15));
  CHECK(close(bs.m21, s * kI, 1e-15));
  CHECK(close(bs.m22, Complex(s, 0.0), 1e-15));
  CHECK(mzikd::optics::is_unitary(bs));
}

TEST_CASE("phase shifter acts on the lower arm only") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 100; ++k) {
    const double phase = u(rng);
    const auto ps = mzikd::optics::phase_shifter(phase);
    CHECK(close(ps.m11, Complex(1.0, 0.0), 1e-15));
    CHECK(close(ps.m12, Complex(0.0, 0.0), 1e-15));
    CHECK(close(ps.m21, Complex(0.0, 0.0), 1e-15));
    CHECK(close(ps.m22, std::exp(kI * phase), 1e-15));
    CHECK(mzikd::optics::is_unitary(ps));
  }
  CHECK_THROWS(mzikd::optics::phase_shifter(
      std::numeric_limits<double>::quiet_NaN()));
  CHECK_THROWS(mzikd::optics::phase_shifter(
      std::numeric_limits<double>::infinity()));
}

TEST_CASE("compose applies the right factor first") {
  const auto bs = mzikd::optics::beam_splitter();
  const auto ps = mzikd::optics::phase_shifter(0.7);
  const auto seq_first =
      mzikd::optics::apply(bs, mzikd::optics::source_field(), Stage::e34);
  const auto seq_second = mzikd::optics::apply(ps, seq_first, Stage::e34);
  const auto composed = mzikd::optics::apply(
      mzikd::optics::compose(ps, bs), mzikd::optics::source_field(), Stage::e34);
  CHECK(close(seq_second.upper, composed.upper, 1e-15));
  CHECK(close(seq_second.lower, composed.lower, 1e-15));
}

TEST_CASE("single-pass matrix matches its closed form over random phases") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-4.0 * kPi, 4.0 * kPi);
  for (int k = 0; k < 1000; ++k) {
    const double phi = u(rng);
    const auto mz = mzikd::optics::mzi_transform(phi);
    CHECK(mat_close(mz, testsup::reference_single(phi), 1e-12));
    CHECK(mzikd::optics::is_unitary(mz));
  }
}

TEST_CASE("single-pass matrix at the basis phases") {
  // phase 0 swaps the arms up to a factor i, phase pi keeps them with a
  // sign flip on the lower arm.
  const auto mz0 = mzikd::optics::mzi_transform(0.0);
  CHECK(close(mz0.m11, Complex(0.0, 0.0), 1e-15));
  CHECK(close(mz0.m12, kI, 1e-15));
  CHECK(close(mz0.m21, kI, 1e-15));
  CHECK(close(mz0.m22, Complex(0.0, 0.0), 1e-15));
  const auto mzp = mzikd::optics::mzi_transform(kPi);
  CHECK(close(mzp.m11, Complex(1.0, 0.0), 1e-12));
  CHECK(close(mzp.m12, Complex(0.0, 0.0), 1e-12));
  CHECK(close(mzp.m21, Complex(0.0, 0.0), 1e-12));
  CHECK(close(mzp.m22, Complex(-1.0, 0.0), 1e-12));
}

TEST_CASE("double pass at one phase collapses to a global phase") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (int k = 0; k < 1000; ++k) {
    const double theta = u(rng);
    const auto rt = mzikd::optics::round_trip_transform(theta, theta);
    const Complex g = -std::exp(kI * theta);
    CHECK(close(rt.m11, g, 1e-12));
    CHECK(close(rt.m12, Complex(0.0, 0.0), 1e-12));
    CHECK(close(rt.m21, Complex(0.0, 0.0), 1e-12));
    CHECK(close(rt.m22, g, 1e-12));
  }
}

TEST_CASE("round-trip matrix matches its closed form over random pairs") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-2.0 * kPi, 2.0 * kPi);
  for (int k = 0; k < 1000; ++k) {
    const double psi = u(rng);
    const double phi = u(rng);
    const auto rt = mzikd::optics::round_trip_transform(psi, phi);
    CHECK(mat_close(rt, testsup::reference_round_trip(psi, phi), 1e-12));
    CHECK(mzikd::optics::is_unitary(rt));
  }
}

TEST_CASE("round-trip matrices at the four basis pairs") {
  struct Case {
    double psi, phi;
    Complex m11, m12, m21, m22;
  };
  const Case cases[] = {
      {0.0, 0.0, {-1, 0}, {0, 0}, {0, 0}, {-1, 0}},
      {kPi, kPi, {1, 0}, {0, 0}, {0, 0}, {1, 0}},
      {0.0, kPi, {0, 0}, -kI, kI, {0, 0}},
      {kPi, 0.0, {0, 0}, kI, -kI, {0, 0}},
  };
  for (const auto& c : cases) {
    const auto rt = mzikd::optics::round_trip_transform(c.psi, c.phi);
    CHECK(close(rt.m11, c.m11, 1e-12));
    CHECK(close(rt.m12, c.m12, 1e-12));
    CHECK(close(rt.m21, c.m21, 1e-12));
    CHECK(close(rt.m22, c.m22, 1e-12));
  }
}

TEST_CASE("energy is conserved through every transform") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    FieldPair f;
    f.upper = Complex(u(rng), u(rng));
    f.lower = Complex(u(rng), u(rng));
    const double before = norm2(f);
    const double phase = 3.0 * u(rng);
    const auto via_bs =
        mzikd::optics::apply(mzikd::optics::beam_splitter(), f, Stage::e34);
    const auto via_mz =
        mzikd::optics::apply(mzikd::optics::mzi_transform(phase), f, Stage::e56);
    const auto via_rt = mzikd::optics::apply(
        mzikd::optics::round_trip_transform(phase, 2.0 * phase), f, Stage::e910);
    CHECK(close(norm2(via_bs), before, 1e-12));
    CHECK(close(norm2(via_mz), before, 1e-12));
    CHECK(close(norm2(via_rt), before, 1e-12));
  }
}

TEST_CASE("return arm fields carry the two controller phases") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  const double s = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < 300; ++k) {
    const double phi = u(rng);
    const double psi = u(rng);
    const auto f = mzikd::optics::return_arm_fields(phi, psi);
    CHECK(f.stage == Stage::e78);
    CHECK(close(f.upper, -s * std::exp(kI * phi), 1e-12));
    CHECK(close(f.lower, s * kI * std::exp(kI * psi), 1e-12));
    const auto m = mzikd::optics::observe(f);
    // Equal split regardless of phases; only the coherent sum moves.
    CHECK(close(m.intensity_upper, 0.5, 1e-12));
    CHECK(close(m.intensity_lower, 0.5, 1e-12));
    CHECK(close(m.interference, 1.0 - std::sin(phi - psi), 1e-12));
  }
}

TEST_CASE("observe reports intensities, visibility and coherent sum") {
  FieldPair f;
  f.upper = Complex(0.6, 0.0);
  f.lower = Complex(0.0, 0.8);
  const auto m = mzikd::optics::observe(f);
  CHECK(close(m.intensity_upper, 0.36, 1e-15));
  CHECK(close(m.intensity_lower, 0.64, 1e-15));
  REQUIRE(m.visibility.has_value());
  CHECK(close(*m.visibility, (0.64 - 0.36) / (0.64 + 0.36), 1e-15));
  CHECK(close(m.interference, std::norm(Complex(0.6, 0.8)), 1e-15));

  FieldPair dark;
  dark.upper = Complex(0.0, 0.0);
  dark.lower = Complex(0.0, 0.0);
  CHECK_FALSE(mzikd::optics::observe(dark).visibility.has_value());
}

TEST_CASE("single-pass visibility follows the cosine fringe") {
  for (int k = 0; k <= 2000; ++k) {
    const double phi = 2.0 * kPi * static_cast<double>(k) / 2000.0;
    const auto ports = mzikd::optics::apply(mzikd::optics::mzi_transform(phi),
                                            mzikd::optics::source_field(),
                                            Stage::e56);
    const auto m = mzikd::optics::observe(ports);
    REQUIRE(m.visibility.has_value());
    CHECK(close(*m.visibility, std::cos(phi), 1e-9));
  }
}

TEST_CASE("round-trip visibility follows the shifted cosine surface") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (int k = 0; k < 2000; ++k) {
    const double phi = u(rng);
    const double psi = u(rng);
    CHECK(close(mzikd::optics::visibility_surface(phi, psi),
                -std::cos(phi - psi), 1e-9));
  }
}

TEST_CASE("observables ignore a global phase") {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (int k = 0; k < 100; ++k) {
    FieldPair f;
    f.upper = std::exp(kI * u(rng)) * 0.4;
    f.lower = std::exp(kI * u(rng)) * 0.9;
    const double theta = u(rng);
    FieldPair g = f;
    g.upper *= std::exp(kI * theta);
    g.lower *= std::exp(kI * theta);
    const auto mf = mzikd::optics::observe(f);
    const auto mg = mzikd::optics::observe(g);
    CHECK(close(mf.intensity_upper, mg.intensity_upper, 1e-12));
    CHECK(close(mf.intensity_lower, mg.intensity_lower, 1e-12));
    CHECK(close(*mf.visibility, *mg.visibility, 1e-12));
    CHECK(close(mf.interference, mg.interference, 1e-12));
  }
}

TEST_CASE("is_unitary rejects lossy transforms") {
  OpticalTransform lossy{{0.5, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.5, 0.0}};
  CHECK_FALSE(mzikd::optics::is_unitary(lossy));
}

TEST_CASE("source field and stage labels") {
  const auto src = mzikd::optics::source_field();
  CHECK(src.stage == Stage::e1);
  CHECK(close(src.upper, Complex(1.0, 0.0), 1e-15));
  CHECK(close(src.lower, Complex(0.0, 0.0), 1e-15));
  CHECK(std::string(mzikd::optics::stage_label(Stage::e1)) == "e1");
  CHECK(std::string(mzikd::optics::stage_label(Stage::e910)) == "e910");
  const std::string text = mzikd::optics::dump(src);
  CHECK(text.find("e1") != std::string::npos);
}
