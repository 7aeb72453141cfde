#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "contlim/schrodinger.hpp"

using namespace contlim;

TEST_CASE("zero potential gives the free operator") {
  const LatticeSpec sq = make_square(1);
  const LatticeTorus t = make_lattice_torus(sq, 0.25, 4.0);
  CHECK(t.n == 16);
  const Mat m = Mat(assemble_Hh(t, PotentialSpec::make("zero", 1.0)));
  const double ih2 = 1.0 / (t.h * t.h);
  for (int s = 0; s < t.n; ++s) {
    CHECK(m(s, s) == doctest::Approx(2.0 * ih2));
    CHECK(m(s, (s + 1) % t.n) == doctest::Approx(-ih2));
    CHECK(m(s, (s + t.n - 1) % t.n) == doctest::Approx(-ih2));
    CHECK(m.row(s).sum() == doctest::Approx(0.0).scale(ih2));
  }
  CHECK_THROWS_AS(assemble_Hh(t, PotentialSpec::make("zero", 0.5)), std::invalid_argument);
}

TEST_CASE("H_h is symmetric and bounded below by the potential") {
  const PotentialSpec v = PotentialSpec::make("harmonic", 1.0);
  for (const char* name : {"square1", "square2", "triangular"}) {
    const LatticeSpec lat = make_preset(name);
    const LatticeTorus t = make_lattice_torus(lat, 0.5, lat.dim() == 1 ? 8.0 : 4.0);
    const Mat m = Mat(assemble_Hh(t, v));
    CHECK((m - m.transpose()).norm() == 0.0);
    const Eigen::VectorXd pot = sample_potential(t, v);
    const Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()[0] >= pot.minCoeff() - 1e-10);
    for (std::size_t s = 0; s < t.size(); ++s) CHECK(pot[s] == doctest::Approx(t.position(s).squaredNorm()));
  }
}

TEST_CASE("harmonic oscillator spectra") {
  const PotentialSpec v = PotentialSpec::make("harmonic", 1.0);
  SchrodingerConfig cfg;
  const LatticeSpec lat = make_preset("square1");
  double last = 1e300;
  for (const double h : {0.25, 0.125, 0.0625}) {
    const SpectrumComparison s = spectra_hausdorff(lat, v, h, 3, cfg);
    REQUIRE(s.reference.size() == 3);
    // -u'' + x^2 u has eigenvalues 1, 3, 5
    for (int i = 0; i < 3; ++i) CHECK(std::abs(s.reference[i] - (2 * i + 1)) < 1e-3);
    CHECK(s.distance < last);
    CHECK(s.distance == doctest::Approx(hausdorff_distance(s.coarse, s.reference)));
    CHECK(s.core_mass >= kMinCoreMass);
    last = s.distance;
  }
  // eigenvalues 2, 4, 4 in two dimensions
  cfg.side = 8.0;
  const SpectrumComparison s2 = spectra_hausdorff(make_preset("square2"), v, 0.25, 3, cfg);
  CHECK(std::abs(s2.reference[0] - 2.0) < 1e-3);
  CHECK(std::abs(s2.reference[2] - 4.0) < 1e-3);

  cfg.side = 4.0;
  CHECK_THROWS_AS(spectra_hausdorff(lat, v, 0.5, 3, cfg), std::domain_error);
  CHECK_THROWS_AS(spectra_hausdorff(lat, v, 0.125, 6, cfg), std::domain_error);
  CHECK_THROWS_AS(spectra_hausdorff(lat, v, 0.125, 0, cfg), std::invalid_argument);
}

TEST_CASE("commutator with the inverse potential shrinks with h") {
  const PotentialSpec v = PotentialSpec::make("harmonic", 1.0);
  const CutoffProfile p = CutoffProfile::build(make_preset("square1"));
  const SchrodingerConfig cfg;
  double last = 1e300;
  for (const double h : {0.5, 0.25, 0.125}) {
    const double c = commutator_norm(p, v, h, cfg);
    CHECK(c >= 0.0);
    CHECK(c < last);
    last = c;
  }
}

TEST_CASE("relative bound is stable in h") {
  const PotentialSpec v = PotentialSpec::make("harmonic", 1.0);
  const SchrodingerConfig cfg;
  double lo = 1e300, hi = 0.0;
  for (const double h : {0.5, 0.25, 0.125}) {
    const RelativeBound r = schrodinger_relative_bound(make_lattice_torus(make_preset("square1"), h, 16.0), v, cfg.power);
    CHECK(r.a > 0.0);
    CHECK(r.a <= 1.0 + 1e-6);  // V (H_0 + V + M)^-1 with H_0 >= 0 and V >= 0
    CHECK(r.b == doctest::Approx(r.a * v.M()));
    lo = std::min(lo, r.a);
    hi = std::max(hi, r.a);
  }
  CHECK(hi / lo <= 2.0);
}

TEST_CASE("qualitative resolvent convergence") {
  const PotentialSpec v = PotentialSpec::make("harmonic", 1.0);
  const CutoffProfile p = CutoffProfile::build(make_preset("square1"));
  SchrodingerConfig cfg;
  cfg.side = 8.0;
  const QualitativeReport r = resolvent_convergence_qualitative(p, v, cplx(0.0, 1.0), {0.5, 0.25, 0.125}, cfg);
  CHECK(r.strictly_decreasing);
  CHECK(r.estimates.size() == 3);
  CHECK_THROWS_AS(resolvent_convergence_qualitative(p, v, cplx(0.0, 1.0), {0.5, 0.25}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(resolvent_convergence_qualitative(p, v, 1.0, {0.5, 0.25, 0.125}, cfg), std::invalid_argument);
}

TEST_CASE("Hausdorff distance") {
  CHECK(hausdorff_distance({1.0, 2.0}, {1.1}) == doctest::Approx(0.9));
  CHECK(hausdorff_distance({1.0, 2.0}, {2.0, 1.0}) == 0.0);
  CHECK(hausdorff_distance({0.0}, {0.0, 0.25, 3.0}) == 3.0);
  CHECK_THROWS_AS(hausdorff_distance({}, {1.0}), std::invalid_argument);
}

TEST_CASE("potential registry") {
  const Vec x = (Vec(2) << 0.5, -2.0).finished();
  CHECK(PotentialSpec::make("harmonic")(x, 10.0) == doctest::Approx(4.25));
  CHECK(PotentialSpec::make("zero")(x, 10.0) == 0.0);
  CHECK(PotentialSpec::make("formula:x2*L")(x, 10.0) == doctest::Approx(-20.0));
  CHECK_THROWS_AS(PotentialSpec::make("coulomb"), std::invalid_argument);

  PotentialSpec h = PotentialSpec::make("harmonic", 1.0);
  h.check(2, 8.0, 1000, 3);
  // (1 + |y|^2) / (1 + |x|^2) <= 1 + (2r + 1) / (1 + r^2) with r = |x|, whose
  // maximum over r is (3 + sqrt 5) / 2
  CHECK(h.c1() > 1.0);
  CHECK(h.c1() <= (3.0 + std::sqrt(5.0)) / 2.0 + 1e-12);
  PotentialSpec bad = PotentialSpec::make("formula:-5", 1.0);
  CHECK_THROWS_AS(bad.check(1, 4.0, 10, 1), std::invalid_argument);

  CHECK_THROWS_AS(make_lattice_torus(make_square(1), 0.25, 0.75), std::invalid_argument);
  CHECK_THROWS_AS(make_lattice_torus(make_square(1), 0.3, 1.0), std::invalid_argument);
}
