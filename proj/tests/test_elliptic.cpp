#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "contlim/elliptic.hpp"

using namespace contlim;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

CoefficientField coeffs_1d() { return CoefficientField({{"2+sin(2*pi*x1/L)"}}, "1+cos(2*pi*x1/L)", 1.0, 0.0, 2.0); }

CoefficientField coeffs_2d() {
  return CoefficientField({{"2+sin(2*pi*x1/L)", "0.5*cos(2*pi*x2/L)"}, {"0.5*cos(2*pi*x2/L)", "2+cos(2*pi*x2/L)"}},
                          "x1*x1", 0.4, 0.0, 2.0);
}

CVec random_cvec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  CVec v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v;
}
}  // namespace

TEST_CASE("one-dimensional stencils from the expanded formula") {
  const CoefficientField c = coeffs_1d();
  const EllipticTorus t = make_elliptic_torus(1, 0.125, 2.0);
  const double ih2 = 1.0 / (t.h * t.h);
  auto a = [&](long s) { return c.a(0, 0, t.position(static_cast<std::size_t>((s + t.n) % t.n))); };
  const Mat plus = Mat(assemble(c, t, EllipticVariant::P_plus).matrix);
  const Mat minus = Mat(assemble(c, t, EllipticVariant::P_minus).matrix);
  const Mat q_plus = Mat(assemble(c, t, EllipticVariant::Q_plus).matrix);
  Mat ep = Mat::Zero(t.n, t.n), em = Mat::Zero(t.n, t.n);
  for (long s = 0; s < t.n; ++s) {
    const long r = (s + 1) % t.n, l = (s + t.n - 1) % t.n;
    const double v = c.V(t.position(s));
    // P^+ u(x) = h^-2 [a(x)(u(x) - u(x+h)) + a(x-h)(u(x) - u(x-h))] + V u
    ep(s, s) += ih2 * (a(s) + a(s - 1)) + v;
    ep(s, r) -= ih2 * a(s);
    ep(s, l) -= ih2 * a(s - 1);
    // P^- u(x) = h^-2 [a(x+h)(u(x) - u(x+h)) + a(x)(u(x) - u(x-h))] + V u
    em(s, s) += ih2 * (a(s + 1) + a(s)) + v;
    em(s, r) -= ih2 * a(s + 1);
    em(s, l) -= ih2 * a(s);
    CHECK(std::abs(q_plus(s, s) - plus(s, s) + v) < 1e-12);
  }
  CHECK((plus - ep).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((minus - em).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("assembled operators are symmetric") {
  for (const CoefficientField& c : {coeffs_1d(), coeffs_2d()}) {
    const EllipticTorus t = make_elliptic_torus(c.dim(), 0.25, 2.0);
    for (auto v : {EllipticVariant::P_plus, EllipticVariant::P_minus, EllipticVariant::H0h, EllipticVariant::Q_plus,
                   EllipticVariant::Q_minus}) {
      const SpMat m = assemble(c, t, v).matrix;
      CHECK(SpMat(m - SpMat(m.transpose())).norm() == 0.0);
    }
  }
}

TEST_CASE("difference operators") {
  std::mt19937_64 rng(31);
  const EllipticTorus t = make_elliptic_torus(2, 0.25, 2.0);
  // D^+ and D^- are adjoint to each other
  for (int trial = 0; trial < 100; ++trial) {
    const CVec u = random_cvec(rng, t.size()), v = random_cvec(rng, t.size());
    const int j = trial % 2;
    const cplx lhs = difference_apply(1, j, t, u).dot(v);
    const cplx rhs = u.dot(difference_apply(-1, j, t, v));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + 1.0));
  }
  // Delta^+ Delta^- = Delta^- Delta^+ and -h^-2 sum of them is H0h
  SpMat lap(t.size(), t.size());
  for (int j = 0; j < 2; ++j) {
    const SpMat p = difference_stencil(1, j, t), m = difference_stencil(-1, j, t);
    CHECK(SpMat(p * m - m * p).norm() == 0.0);
    CHECK(SpMat(SpMat(p.transpose()) + m).norm() == 0.0);
    lap -= p * m;
  }
  lap /= t.h * t.h;
  const SpMat h0 = assemble(CoefficientField::identity(2, 2.0), t, EllipticVariant::H0h).matrix;
  CHECK(SpMat(lap - h0).norm() < 1e-12);
  CHECK(SpMat(assemble(CoefficientField::identity(2, 2.0), t, EllipticVariant::P_plus).matrix - h0).norm() < 1e-12);

  // plane waves: D^+-_j multiplies exp(2 pi i xi.x) by the difference symbol
  const std::vector<Vec> x = t.positions();
  Vec xi(2);
  xi << 3.0 / (t.n * t.h), -5.0 / (t.n * t.h);
  CVec w(t.size());
  for (std::size_t s = 0; s < t.size(); ++s) w[s] = std::exp(cplx(0.0, kTwoPi * xi.dot(x[s])));
  for (int sign : {1, -1})
    for (int j = 0; j < 2; ++j)
      CHECK((difference_apply(sign, j, t, w) - difference_symbol(sign, t.h, xi[j]) * w).norm() < 1e-10);
  CHECK(std::abs(difference_symbol(1, 0.01, 0.3) - kTwoPi * 0.3) < 0.01 * 0.09 * 2.0 * kTwoPi * kTwoPi);
  CHECK_THROWS_AS(difference_apply(0, 0, t, w), std::invalid_argument);
  CHECK_THROWS_AS(difference_apply(1, 2, t, w), std::invalid_argument);
}

TEST_CASE("difference symbol ratio is bounded and nearly constant in h") {
  double lo = 1e300, hi = 0.0;
  for (const double h : dyadic_h(1, 8)) {
    const SymbolRatio r = difference_symbol_ratio(2, h, 41);
    CHECK(r.value > 0.0);
    CHECK(r.argmax.norm() <= 1.0);
    lo = std::min(lo, r.value);
    hi = std::max(hi, r.value);
  }
  CHECK(hi / lo <= 1.5);
  // the leading term is (2 pi)^2 / 2 at |xi| = 1 along an axis
  CHECK(difference_symbol_ratio(1, 1e-4, 3).value == doctest::Approx(kTwoPi * kTwoPi / 2.0).epsilon(1e-3));
}

TEST_CASE("quadratic forms") {
  std::mt19937_64 rng(32);
  for (const CoefficientField& c : {coeffs_1d(), coeffs_2d()}) {
    const EllipticTorus t = make_elliptic_torus(c.dim(), c.dim() == 1 ? 2.0 / 64 : 0.25, 2.0);
    for (int sign : {1, -1}) {
      const SpMat p = assemble(c, t, sign > 0 ? EllipticVariant::P_plus : EllipticVariant::P_minus).matrix;
      for (int trial = 0; trial < 10; ++trial) {
        const CVec u = random_cvec(rng, t.size());
        const double q = quadratic_form(p, u);
        CHECK(q > 0.0);
        CHECK(std::abs(difference_form(c, t, sign, true, u) - q) <= 1e-10 * q);
        if (c.diagonal()) CHECK(std::abs(edge_form(c, t, sign, u) - q) <= 1e-10 * q);
      }
    }
  }
  const EllipticTorus t = make_elliptic_torus(2, 0.25, 2.0);
  CHECK_THROWS_AS(edge_form(coeffs_2d(), t, 1, CVec::Ones(t.size())), std::invalid_argument);
}

TEST_CASE("Q is bounded below by c0 |D u|^2") {
  std::mt19937_64 rng(33);
  for (const CoefficientField& c : {coeffs_1d(), coeffs_2d()}) {
    const EllipticTorus t = make_elliptic_torus(c.dim(), 0.125, 2.0);
    for (int sign : {1, -1}) {
      const SpMat q = assemble(c, t, sign > 0 ? EllipticVariant::Q_plus : EllipticVariant::Q_minus).matrix;
      for (int trial = 0; trial < 20; ++trial) {
        const CVec u = random_cvec(rng, t.size());
        double du = 0.0;
        for (int j = 0; j < c.dim(); ++j) du += difference_apply(sign, j, t, u).squaredNorm();
        CHECK(quadratic_form(q, u) >= c.c0() * du * (1.0 - 1e-12));
      }
    }
  }
}

TEST_CASE("potential is relatively bounded uniformly in h") {
  // ||V u|| <= ||V (P + 1)^-1|| ||(P + 1) u|| <= a (||P u|| + ||u||)
  const CoefficientField c = coeffs_1d();
  PowerConfig power;
  power.max_iterations = 200;
  double lo = 1e300, hi = 0.0;
  for (const double h : {0.125, 0.0625, 0.03125, 0.015625}) {
    const EllipticTorus t = make_elliptic_torus(1, h, 2.0);
    Eigen::VectorXd v(t.size());
    for (std::size_t s = 0; s < t.size(); ++s) v[s] = c.V(t.position(s));
    for (auto variant : {EllipticVariant::P_plus, EllipticVariant::P_minus}) {
      const double a = relative_bound(assemble(c, t, variant).matrix, v, 1.0, power).value;
      CHECK(a > 0.0);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  CHECK(hi / lo <= 2.0);
}

TEST_CASE("c1 estimate against a dense generalized eigenproblem") {
  const CoefficientField c = coeffs_1d();
  for (const double h : {0.125, 2.0 / 64}) {
    const EllipticTorus t = make_elliptic_torus(1, h, 2.0);
    const SpMat p = assemble(c, t, EllipticVariant::P_plus).matrix;
    const SpMat h0 = assemble(c, t, EllipticVariant::H0h).matrix;
    for (const double c2 : {1.0, 100.0}) {
      // c1 = 1 / lambda_max of B x = lambda A x, A = P^T P + c2, B = H0^T H0
      const Mat pd(p), hd(h0);
      const Mat a = pd.transpose() * pd + c2 * Mat::Identity(t.n, t.n);
      const Mat b = hd.transpose() * hd;
      const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(b, a);
      const double exact = 1.0 / es.eigenvalues().maxCoeff();
      const double est = estimate_c1(p, h0, t, c2, 8, 1, 300, 1e-9);
      CHECK(est >= exact * (1.0 - 1e-9));
      CHECK(est <= exact * (1.0 + 1e-8));
    }
  }
}

TEST_CASE("elliptic estimate report") {
  EllipticEstimateConfig cfg;
  cfg.h_values = {0.125, 0.0625};
  const EllipticEstimateReport r = elliptic_estimate_check(coeffs_1d(), cfg);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.c1_est > 0.5);
  CHECK(std::find(cfg.c2_ladder.begin(), cfg.c2_ladder.end(), r.c2_est) != cfg.c2_ladder.end());
  for (std::size_t i = 1; i < r.c1_uniform.size(); ++i) CHECK(r.c1_uniform[i] >= r.c1_uniform[i - 1] * (1.0 - 1e-9));
}

TEST_CASE("variants and invalid input") {
  CHECK(parse_variant("P_minus") == EllipticVariant::P_minus);
  CHECK(parse_variant("plus") == EllipticVariant::P_plus);
  for (auto v : {EllipticVariant::P_plus, EllipticVariant::P_minus, EllipticVariant::H0h, EllipticVariant::Q_plus,
                 EllipticVariant::Q_minus})
    CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(make_elliptic_torus(1, 0.3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_elliptic_torus(1, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientField({{"1", "0"}, {"1", "1"}}, "0", 1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientField({{"1"}}, "0", 0.0, 0.0, 1.0), std::invalid_argument);
  // torus side 3 is not a multiple of the period 2
  CHECK_THROWS_AS(assemble(coeffs_1d(), make_elliptic_torus(1, 0.25, 3.0), EllipticVariant::P_plus),
                  std::invalid_argument);
  const CoefficientField weak({{"0.5"}}, "0", 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(assemble(weak, make_elliptic_torus(1, 0.25, 1.0), EllipticVariant::P_plus), std::invalid_argument);

  const CoefficientField j = CoefficientField::from_json(coeffs_2d().to_json());
  const Vec x = (Vec(2) << 0.3, 1.1).finished();
  CHECK((j.a_matrix(x) - coeffs_2d().a_matrix(x)).norm() == 0.0);
  CHECK(j.V(x) == coeffs_2d().V(x));
  CHECK_THROWS_AS(CoefficientField::from_json(nlohmann::json{{"V", "0"}}), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientField::load("/nonexistent/coeffs.json"), std::invalid_argument);
}
