#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "contlim/lattice.hpp"

using namespace contlim;

namespace {

Vec random_vec(std::mt19937_64& rng, int d, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

TEST_CASE("preset cell volumes and edge counts") {
  CHECK(make_preset("triangular").cell_volume() == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-14));
  CHECK(make_preset("square2").cell_volume() == doctest::Approx(1.0));
  const LatticeSpec oct = make_preset("octahedral");
  CHECK(oct.edge_count() == 6);
  CHECK(oct.degree() == 12);
  CHECK(make_preset("square_3").dim() == 3);
  CHECK_THROWS_AS(make_preset("kagome"), std::invalid_argument);
}

TEST_CASE("dual lattice pairs with the generator") {
  for (const auto& name : preset_names()) {
    const LatticeSpec lat = make_preset(name);
    const DualLattice d = dual(lat);
    // independent oracle: the dual generator is L^{-T}
    const Mat expected = lat.generator().inverse().transpose();
    CHECK((d.generator - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((d.generator.transpose() * lat.generator() - Mat::Identity(lat.dim(), lat.dim())).norm() < 1e-12);
    CHECK(lat.cell_volume() * d.cell_volume() == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (int dim = 1; dim <= 3; ++dim) {
    const DualLattice d = dual(make_square(dim));
    CHECK((d.generator - Mat::Identity(dim, dim)).norm() == 0.0);
  }
}

TEST_CASE("zone grids: counts, weights, membership") {
  const BrillouinZone sq = brillouin_zone(dual(make_square(2)), 4);
  CHECK(sq.size() == 16);
  CHECK(sq.total_weight() == doctest::Approx(1.0).epsilon(1e-12));

  const LatticeSpec tri = make_preset("triangular");
  const DualLattice td = dual(tri);
  for (int n : {5, 16, 33}) {
    const BrillouinZone z = brillouin_zone(td, n);
    CHECK(z.total_weight() == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-10));
  }
  // brute-force Wigner-Seitz check over the 2-shell
  const BrillouinZone z = brillouin_zone(td, 24);
  const auto shell = integer_shell(2, 2);
  for (const Vec& xi : z.points) {
    for (const IVec& n : shell) {
      const Vec eta = td.point(n);
      CHECK(xi.norm() <= (xi - eta).norm() + 1e-12);
    }
  }
}

TEST_CASE("zone grids contain each class once") {
  for (const auto& name : preset_names()) {
    const LatticeSpec lat = make_preset(name);
    const DualLattice d = dual(lat);
    const int n = lat.dim() == 3 ? 6 : 10;
    const BrillouinZone z = brillouin_zone(d, n);
    // classes: coordinates of B^-1 xi mod 1 on the n-grid
    const Mat inv = d.generator.inverse();
    std::set<std::vector<long>> seen;
    for (const Vec& xi : z.points) {
      const Vec t = inv * xi;
      std::vector<long> key;
      for (int i = 0; i < lat.dim(); ++i) {
        long k = std::lround(t[i] * n);
        key.push_back(((k % n) + n) % n);
      }
      CHECK(seen.insert(key).second);
    }
    CHECK(seen.size() == z.size());
  }
}

TEST_CASE("reduce to zone and translate back") {
  std::mt19937_64 rng(3);
  for (const auto& name : preset_names()) {
    const LatticeSpec lat = make_preset(name);
    const DualLattice d = dual(lat);
    for (ZoneKind kind : {ZoneKind::first_brillouin, ZoneKind::parallelepiped}) {
      for (int t = 0; t < 100; ++t) {
        const Vec xi = random_vec(rng, lat.dim(), 5.0);
        const ZoneReduction r = reduce_to_zone(d, xi, kind);
        CHECK((r.reduced + d.point(r.translation) - xi).norm() < 1e-12);
        if (kind == ZoneKind::first_brillouin) CHECK(in_first_brillouin(d, r.reduced, 1e-10));
      }
    }
  }
}

TEST_CASE("invalid lattices are rejected") {
  const Mat sing = (Mat(2, 2) << 1, 2, 2, 4).finished();
  CHECK_THROWS_AS(LatticeSpec("s", sing, {{IVec::Unit(2, 0), 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(LatticeSpec("r", Mat::Identity(2, 2), {{IVec::Unit(2, 0), 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(LatticeSpec("w", Mat::Identity(1, 1), {{IVec::Unit(1, 0), 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(LatticeSpec("z", Mat::Identity(1, 1), {{IVec::Zero(1), 1.0}}), std::invalid_argument);
}

TEST_CASE("lattice JSON round trip") {
  for (const auto& name : preset_names()) {
    const LatticeSpec a = make_preset(name);
    const LatticeSpec b = lattice_from_json(lattice_to_json(a));
    CHECK((a.generator() - b.generator()).norm() == 0.0);
    REQUIRE(a.edge_count() == b.edge_count());
    for (int j = 0; j < a.edge_count(); ++j) {
      CHECK(a.edges()[j].coords == b.edges()[j].coords);
      CHECK(a.edges()[j].weight == b.edges()[j].weight);
    }
  }
  CHECK_THROWS_AS(lattice_from_json(nlohmann::json{{"name", "x"}, {"dim", 2}, {"generator", {1, 0, 0}}}),
                  std::invalid_argument);
}
