#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "contlim/operator_norm.hpp"

using namespace contlim;

namespace {
SpMat random_symmetric(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return (a + a.transpose()).sparseView();
}
}  // namespace

TEST_CASE("power iteration on a diagonal operator") {
  const int n = 40;
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = 1.0 + i * 0.1;
  d[17] = -9.0;
  auto apply = [&](const CVec& x) { return CVec(d.cast<cplx>().cwiseProduct(x)); };
  PowerConfig cfg;
  cfg.max_iterations = 500;
  cfg.tolerance = 1e-12;
  const NormEstimate e = power_norm(n, apply, apply, cfg);
  CHECK(e.converged);
  CHECK(e.value == doctest::Approx(9.0).epsilon(1e-6));
  CHECK(e.value <= 9.0 * (1.0 + 1e-12));
  CHECK(power_norm(n, [](const CVec& x) { return CVec(0.0 * x); }, [](const CVec& x) { return CVec(0.0 * x); }, cfg)
            .value == 0.0);
  CHECK((random_vector(10, 4) - random_vector(10, 4)).norm() == 0.0);
  CHECK((random_vector(10, 4) - random_vector(10, 5)).norm() > 0.0);
}

TEST_CASE("shifted solver against a dense solve") {
  const SpMat m = random_symmetric(30, 1);
  const cplx z(0.3, 0.7);
  const ShiftedSolver s(m, z);
  const CMat dense = Mat(m).cast<cplx>();
  const CVec b = random_vector(30, 2);
  const CVec x = s.solve(b);
  CHECK((dense * x - z * x - b).norm() <= 1e-10 * b.norm());
  const CVec y = s.solve_conj(b);
  CHECK((dense * y - std::conj(z) * y - b).norm() <= 1e-10 * b.norm());
  // resolvent identity: the two differ by (z - conj z) R(z) R(conj z) b
  CHECK((x - y - (z - std::conj(z)) * s.solve(y)).norm() <= 1e-9 * x.norm());
  CHECK(s.size() == 30);
}

TEST_CASE("lowest eigenpairs against dense") {
  const SpMat m = random_symmetric(60, 3);
  const Eigen::SelfAdjointEigenSolver<Mat> es{Mat(m)};
  const Eigenpairs p = lowest_eigenpairs(m, 4, es.eigenvalues()[0] - 1.0, 7);
  REQUIRE(p.values.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(p.values[i] - es.eigenvalues()[i]) <= 1e-9 * std::abs(es.eigenvalues()[i]) + 1e-10);
    CHECK((m * p.vectors.col(i) - p.values[i] * p.vectors.col(i)).norm() < 1e-10);
    CHECK(p.vectors.col(i).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("relative bound against dense") {
  const int n = 25;
  // 1D periodic Laplacian plus a potential
  Mat lap = Mat::Zero(n, n);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    lap(i, i) = 2.0;
    lap(i, (i + 1) % n) = -1.0;
    lap(i, (i + n - 1) % n) = -1.0;
    v[i] = 1.0 + i % 5;
  }
  const Mat m = lap + Mat(v.asDiagonal());
  const double shift = 0.5;
  const Mat k = v.asDiagonal() * (m + shift * Mat::Identity(n, n)).inverse();
  const double exact = Eigen::JacobiSVD<Mat>(k).singularValues()[0];
  PowerConfig cfg;
  cfg.max_iterations = 500;
  cfg.tolerance = 1e-12;
  const NormEstimate e = relative_bound(m.sparseView(), v, shift, cfg);
  CHECK(e.value == doctest::Approx(exact).epsilon(1e-6));
  CHECK(e.value <= exact * (1.0 + 1e-10));
}
