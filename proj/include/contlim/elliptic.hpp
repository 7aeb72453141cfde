#pragma once

#include <string>
#include <vector>

#include "contlim/convergence.hpp"
#include "contlim/formula.hpp"
#include "contlim/operator_norm.hpp"

namespace contlim {

/// Coefficients a_jk(x), V(x) of a divergence-form operator sum D_j a_jk D_k + V,
/// given as formulas in x1..xd and the period L.
class CoefficientField {
 public:
  /// `a` is d x d; entries above the diagonal must repeat those below, and
  /// both positions share one formula.
  CoefficientField(std::vector<std::vector<std::string>> a, const std::string& V, double c0, double M, double L);

  static CoefficientField identity(int dim, double L);
  /// {"a": [[...]], "V": "...", "c0": 1.0, "M": 0.0, "L": 2.0}; V, M, L optional.
  static CoefficientField from_json(const nlohmann::json& doc);
  static CoefficientField load(const std::string& path);
  nlohmann::json to_json() const;

  int dim() const { return dim_; }
  double c0() const { return c0_; }
  double M() const { return M_; }
  double period() const { return L_; }

  double a(int j, int k, const Vec& x) const;
  Mat a_matrix(const Vec& x) const;
  double V(const Vec& x) const;
  bool diagonal() const;

  /// Smallest eigenvalue of (a_jk(x)) over the points.
  double min_ellipticity(const std::vector<Vec>& points) const;
  /// max |d a_jk / d x_i| by central differences over the points.
  double derivative_bound(const std::vector<Vec>& points, double step = 1e-5) const;

 private:
  int dim_;
  std::vector<Formula> entries_;  // lower triangle, row-major
  Formula V_;
  double c0_;
  double M_;
  double L_;
  std::vector<std::vector<std::string>> source_;

  const Formula& entry(int j, int k) const;
};

/// Periodic torus (h Z / N h Z)^d with sites indexed axis 0 fastest.
struct EllipticTorus {
  int dim = 1;
  double h = 1.0;
  int n = 1;

  std::size_t size() const;
  Vec position(std::size_t site) const;
  std::vector<Vec> positions() const;
  /// Index of the site shifted by `step` lattice units along axis j.
  std::size_t shift(std::size_t site, int j, int step) const;
};

/// Torus of side N h = side; throws unless side / h is an integer >= 3.
EllipticTorus make_elliptic_torus(int dim, double h, double side);

enum class EllipticVariant { P_plus, P_minus, H0h, Q_plus, Q_minus };

std::string variant_name(EllipticVariant v);
EllipticVariant parse_variant(const std::string& name);

struct TorusOperator {
  EllipticTorus torus;
  EllipticVariant variant = EllipticVariant::P_plus;
  SpMat matrix;
};

/// D^+_{h;j} u(x) = (u(x+h e_j) - u(x))/(ih), D^- u(x) = (u(x) - u(x-h e_j))/(ih).
/// sign is +1 or -1, j is 0-based.
CVec difference_apply(int sign, int j, const EllipticTorus& torus, const CVec& u);

/// Real matrix Delta^+_j = S_j - 1 or Delta^-_j = 1 - S_j^-1, so D^+- = Delta^+- / (ih).
SpMat difference_stencil(int sign, int j, const EllipticTorus& torus);

/// P^+- = h^-2 sum_jk (Delta^+-_j)^T a_jk Delta^+-_k + V, H0h = P^+ with a = 1, V = 0,
/// Q^+- = P^+- with V = 0. The coefficients must be periodic on the torus:
/// N h must be a multiple of the period L.
TorusOperator assemble(const CoefficientField& coeffs, const EllipticTorus& torus, EllipticVariant variant);

/// <D u, A D u> + <u, V u> summed directly over sites (no matrix).
double difference_form(const CoefficientField& coeffs, const EllipticTorus& torus, int sign, bool with_potential,
                       const CVec& u);
/// h^-2 sum over edges e of a~(e) |u(i(e)) - u(t(e))|^2 + sum V |u|^2, each edge
/// counted once, a~((x, x + h e_j)) = a_jj(x) for + and a_jj(x + h e_j) for -.
/// Requires diagonal coefficients.
double edge_form(const CoefficientField& coeffs, const EllipticTorus& torus, int sign, const CVec& u);
/// Re u^H M u.
double quadratic_form(const SpMat& m, const CVec& u);

/// Multiplier of D^+-_{h;j} on exp(2 pi i xi.x): (exp(2 pi i h xi_j) - 1)/(ih) or
/// (1 - exp(-2 pi i h xi_j))/(ih). The continuum D_j = -i d/dx_j has 2 pi xi_j.
cplx difference_symbol(int sign, double h, double xi_j);

struct SymbolRatio {
  double h = 0.0;
  double value = 0.0;  // max |D^+-_{h;j}(xi) - 2 pi xi_j| / (h |xi|^2)
  Vec argmax;
};

/// Max of the ratio over a grid of `points_per_axis`^d points in |xi| <= 1
/// (0 excluded), both signs and all j.
SymbolRatio difference_symbol_ratio(int dim, double h, int points_per_axis);

struct EllipticEstimateConfig {
  std::vector<double> h_values;
  double side = 2.0;  // torus side N h
  EllipticVariant variant = EllipticVariant::P_plus;
  std::vector<double> c2_ladder{1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0, 16384.0, 65536.0};
  int trials = 8;
  std::uint64_t seed = 1;
  int max_iterations = 300;
  double tolerance = 1e-9;

  nlohmann::json to_json() const;
};

/// c1(c2) = min over u of (||Pu||^2 + c2 ||u||^2) / ||H0h u||^2, estimated over
/// random vectors, low and high plane waves, spikes, and a block iteration with
/// Rayleigh-Ritz for the pencil started from the best of those.
double estimate_c1(const SpMat& p, const SpMat& h0, const EllipticTorus& torus, double c2, int trials,
                   std::uint64_t seed, int max_iterations, double tolerance);

struct EllipticEstimateRow {
  double h = 0.0;
  int n = 0;
  std::vector<double> c1;  // per ladder entry
};

struct EllipticEstimateReport {
  std::vector<double> c2_ladder;
  std::vector<EllipticEstimateRow> rows;
  std::vector<double> c1_uniform;  // min over h per ladder entry
  double c2_est = 0.0;             // smallest ladder c2 reaching half the best uniform c1
  double c1_est = 0.0;             // uniform c1 at c2_est
  nlohmann::json config;

  nlohmann::json to_json() const;
};

EllipticEstimateReport elliptic_estimate_check(const CoefficientField& coeffs, const EllipticEstimateConfig& config);

struct EllipticConvergenceConfig {
  cplx z{0.0, 1.0};
  std::vector<double> h_values;
  double side = 8.0;
  int ref_factor = 8;
  EllipticVariant variant = EllipticVariant::P_plus;
  PowerConfig power;

  nlohmann::json to_json() const;
};

struct EllipticConvergenceReport {
  ConvergenceReport fit;
  std::vector<NormEstimate> estimates;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

/// ||R_ref - J_h (P_h - z)^-1 J_h^*|| on the torus, with R_ref the resolvent of
/// the centred operator (P^+ + P^-)/2 at spacing h / ref_factor standing in for
/// the continuum. `profile` must belong to the square lattice of the same dimension.
NormEstimate elliptic_resolvent_difference(const CoefficientField& coeffs, const CutoffProfile& profile, double h,
                                           const EllipticConvergenceConfig& config);

EllipticConvergenceReport elliptic_convergence(const CoefficientField& coeffs, const CutoffProfile& profile,
                                               const EllipticConvergenceConfig& config);

}  // namespace contlim
