#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "contlim/symbols.hpp"

using namespace contlim;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}
}  // namespace

TEST_CASE("continuum symbol values") {
  CHECK(eval_p0(make_preset("triangular"), vec({1.0, 0.0})) == doctest::Approx(1.5 * kTwoPi * kTwoPi).epsilon(1e-13));
  // tetrahedral: sum over the six generators by hand
  const LatticeSpec tet = make_preset("tetrahedral");
  double sum = 0.0;
  for (int j = 0; j < tet.edge_count(); ++j) sum += std::pow(kTwoPi * tet.edge_vector(j)[1], 2);
  CHECK(eval_p0(tet, vec({0.0, 1.0, 0.0})) == doctest::Approx(sum).epsilon(1e-13));
  CHECK(eval_p0(tet, vec({0.0, 1.0, 0.0})) == doctest::Approx(2.0 * kTwoPi * kTwoPi).epsilon(1e-12));
  for (const auto& name : preset_names()) {
    const LatticeSpec lat = make_preset(name);
    CHECK(eval_p0(lat, Vec::Zero(lat.dim())) == 0.0);
    CHECK(eval_p0h(lat, 0.5, Vec::Zero(lat.dim())) == 0.0);
  }
}

TEST_CASE("preset limit coefficients") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  const std::vector<std::pair<std::string, double>> limits{
      {"triangular", 1.5}, {"tetrahedral", 2.0}, {"octahedral", 2.0}, {"square2", 1.0}, {"square3", 1.0}};
  for (const auto& [name, c] : limits) {
    const LatticeSpec lat = make_preset(name);
    for (int t = 0; t < 20; ++t) {
      Vec xi(lat.dim());
      for (int i = 0; i < lat.dim(); ++i) xi[i] = n(rng);
      const double expected = c * kTwoPi * kTwoPi * xi.squaredNorm();
      CHECK(std::abs(eval_p0(lat, xi) - expected) <= 1e-12 * expected);
      CHECK(eval_p0(lat, xi) > 0.0);
    }
  }
}

TEST_CASE("discrete symbol values, bounds and periodicity") {
  const LatticeSpec sq = make_square(1);
  CHECK(eval_p0h(sq, 1.0, vec({0.5})) == doctest::Approx(2.0 * (1.0 - std::cos(std::numbers::pi))));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> k(-4, 4);
  for (const auto& name : preset_names()) {
    const LatticeSpec lat = make_preset(name);
    const DualLattice d = dual(lat);
    for (double h : {1.0, 0.25}) {
      for (int t = 0; t < 10; ++t) {
        Vec xi(lat.dim());
        IVec eta(lat.dim());
        for (int i = 0; i < lat.dim(); ++i) {
          xi[i] = u(rng) / h;
          eta[i] = k(rng);
        }
        const double v = eval_p0h(lat, h, xi);
        CHECK(v >= 0.0);
        CHECK(v <= p0h_upper_bound(lat, h));
        CHECK(std::abs(eval_p0h(lat, h, xi + d.point(eta) / h) - v) <= 1e-10 * std::max(1.0, v));
      }
    }
  }
  CHECK_THROWS_AS(eval_p0h(sq, 0.0, vec({0.1})), std::invalid_argument);
  CHECK_THROWS_AS(eval_p0(sq, vec({0.1, 0.2})), std::invalid_argument);
}

TEST_CASE("Taylor remainder against the quartic bound on the triangular lattice") {
  const LatticeSpec tri = make_preset("triangular");
  // |2(1 - cos t) - t^2| <= t^4/12 termwise
  double c = 0.0;
  for (int j = 0; j < tri.edge_count(); ++j) c += tri.edges()[j].weight * std::pow(kTwoPi * tri.edge_vector(j).norm(), 4);
  c /= 12.0;
  for (double h : {0.5, 0.125, 1.0 / 64}) {
    for (double r : {0.1, 0.5, 1.0}) {
      for (double a = 0.0; a < 6.28; a += 0.3) {
        const Vec xi = vec({r * std::cos(a), r * std::sin(a)});
        const double diff = std::abs(eval_p0h(tri, h, xi) - eval_p0(tri, xi));
        CHECK(diff <= c * h * h * std::pow(r, 4) * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("symbol closures") {
  const LatticeSpec tri = make_preset("triangular");
  const ScalarSymbol p0 = ScalarSymbol::continuum(tri);
  const ScalarSymbol p0h = ScalarSymbol::discrete(tri, 0.5);
  const ScalarSymbol r = ScalarSymbol::resolvent(p0h, cplx(0.0, 1.0));
  const Vec xi = vec({0.3, -0.2});
  CHECK(p0(xi).real() == eval_p0(tri, xi));
  CHECK(p0h(xi).real() == eval_p0h(tri, 0.5, xi));
  CHECK(std::abs(r(xi) - 1.0 / (eval_p0h(tri, 0.5, xi) - cplx(0.0, 1.0))) < 1e-15);
  CHECK(r.kind() == ScalarSymbol::Kind::resolvent_of);
  CHECK_THROWS_AS(ScalarSymbol::resolvent(p0, 1.0), std::invalid_argument);
}

TEST_CASE("suprema over the zone") {
  const LatticeSpec sq = make_square(1);
  const BrillouinZone zone = brillouin_zone(dual(sq), 64);
  CHECK(sup_over_zone([](const Vec&) { return 1.0; }, zone, 3).value == 1.0);
  const ScalarSymbol g = ScalarSymbol::resolvent(ScalarSymbol::continuum(sq), cplx(0.0, 1.0));
  const SupResult s = sup_over_zone([&](const Vec& xi) { return std::abs(g(xi)); }, zone, 3);
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.argmax.norm() < 1e-12);
  const SupResult p = sup_over_zone([&](const Vec& xi) { return eval_p0h(sq, 1.0, xi); }, zone, 3);
  CHECK(p.value == doctest::Approx(4.0).epsilon(1e-12));

  // dense-grid brute force on the triangular zone agrees from below
  const LatticeSpec tri = make_preset("triangular");
  auto f = [&](const Vec& xi) { return eval_p0h(tri, 1.0, xi); };
  const BrillouinZone dense = brillouin_zone(dual(tri), 400);
  double brute = 0.0;
  for (const Vec& xi : dense.points) brute = std::max(brute, f(xi));
  const SupResult refined = sup_over_zone(f, brillouin_zone(dual(tri), 64), 3);
  CHECK(refined.value >= brute - 1e-9);
  CHECK(refined.value <= p0h_upper_bound(tri, 1.0));
  CHECK(refined.value == doctest::Approx(9.0).epsilon(1e-6));  // 2 * 3 * (1 - cos(2 pi / 3)) at the zone corner

  // refinement never lowers the estimate
  double last = 0.0;
  for (int rounds = 0; rounds <= 3; ++rounds) {
    ScanConfig cfg;
    cfg.points_per_axis = 16;
    cfg.refine_rounds = rounds;
    const double v = sup_over_zone(f, brillouin_zone(dual(tri), 16), cfg).value;
    CHECK(v >= last);
    last = v;
  }
}
