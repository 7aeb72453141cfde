#pragma once

#include <string>
#include <vector>

#include "contlim/convergence.hpp"
#include "contlim/formula.hpp"
#include "contlim/operator_norm.hpp"

namespace contlim {

/// A potential from the registry: "zero", "harmonic" (|x|^2), or
/// "formula:<expr>" in x1..x3 and the box side L.
class PotentialSpec {
 public:
  static PotentialSpec make(const std::string& id, double M = 1.0);

  const std::string& id() const { return id_; }
  double M() const { return M_; }
  /// Unit-ball comparability constant measured by `check`, 0 before.
  double c1() const { return c1_; }
  double operator()(const Vec& x, double box_side) const;

  /// Spot checks V + M >= 1 and c1^-1 (V(x)+M) <= V(y)+M <= c1 (V(x)+M) on
  /// random pairs |x - y| <= 1 inside the box; stores the measured c1.
  /// Throws if V + M < 1 at a sample.
  void check(int dim, double box_side, int samples, std::uint64_t seed);

  nlohmann::json to_json() const;

 private:
  std::string id_;
  Formula formula_;
  double M_ = 1.0;
  double c1_ = 0.0;
};

/// Periodic patch of h Lambda with N sites per lattice axis. Site n (lattice
/// coordinates in [-N/2, N/2)^d, axis 0 fastest) sits at h L n.
struct LatticeTorus {
  LatticeSpec lattice;
  double h = 1.0;
  int n = 2;

  std::size_t size() const;
  IVec coords(std::size_t site) const;
  Vec position(std::size_t site) const;
  /// Site reached by adding the integer offset (periodically).
  std::size_t offset(std::size_t site, const IVec& step) const;
  /// Physical side in lattice-axis units, N h.
  double side() const { return h * n; }
};

LatticeTorus make_lattice_torus(const LatticeSpec& lattice, double h, double side);

/// H_h = H_{0,h} + V_h on the torus, with
/// H_{0,h} u(x) = h^-2 sum_j mu_j (2u(x) - u(x + h f^j) - u(x - h f^j)).
/// Throws if V + M < 1 at a site.
SpMat assemble_Hh(const LatticeTorus& torus, const PotentialSpec& V);
Eigen::VectorXd sample_potential(const LatticeTorus& torus, const PotentialSpec& V);

struct SchrodingerConfig {
  double side = 16.0;  // box side in lattice-axis units
  int ref_factor = 8;
  PowerConfig power;

  nlohmann::json to_json() const;
};

/// ||R_ref - J_h (H_h - mu)^-1 J_h^*|| with R_ref the resolvent of H at spacing
/// h / ref_factor on the same box. `profile` must belong to the torus lattice.
NormEstimate schrodinger_resolvent_difference(const CutoffProfile& profile, const PotentialSpec& V, cplx mu, double h,
                                              const SchrodingerConfig& config);

struct QualitativeReport {
  ConvergenceReport fit;  // slope recorded, not asserted
  std::vector<NormEstimate> estimates;
  bool strictly_decreasing = false;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

QualitativeReport resolvent_convergence_qualitative(const CutoffProfile& profile, const PotentialSpec& V, cplx mu,
                                                    const std::vector<double>& h_values,
                                                    const SchrodingerConfig& config);

/// max over test functions f of ||(G_h J_h^* - J_h^* G) f|| / ||f|| with
/// G = (V + M)^-1, f sampled on the fine grid of spacing h / ref_factor.
/// The family: Gaussians of widths 1 and 1/2 at the origin and at distance 2
/// along the first axis, and a modulated Gaussian exp(2 pi i x1) e^{-|x|^2}.
double commutator_norm(const CutoffProfile& profile, const PotentialSpec& V, double h,
                       const SchrodingerConfig& config);

struct RelativeBound {
  double h = 0.0;
  double a = 0.0;  // ||V_h (H_h + M)^-1||
  double b = 0.0;  // a * M
};

/// ||V_h u|| <= a ||H_h u|| + b ||u|| from a = ||V_h (H_h + M)^-1||.
RelativeBound schrodinger_relative_bound(const LatticeTorus& torus, const PotentialSpec& V, const PowerConfig& power);

struct SpectrumComparison {
  double h = 0.0;
  std::vector<double> coarse;     // k lowest eigenvalues of H_h
  std::vector<double> reference;  // same at h / ref_factor
  double distance = 0.0;          // Hausdorff distance of the two sets
  double core_mass = 0.0;         // min over all eigenvectors of the mass in the core
  double boundary_potential = 0.0;

  nlohmann::json to_json() const;
};

/// Inner part of the box holding the reliable eigenfunctions: sites with
/// every lattice coordinate |n_i| < (3/8) N.
inline constexpr double kCoreFraction = 0.75;
inline constexpr double kMinCoreMass = 0.99;

double hausdorff_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Throws std::domain_error when the truncation is unreliable: an eigenvector
/// with core mass below 99 %, or an eigenvalue above V's minimum on the box
/// boundary.
SpectrumComparison spectra_hausdorff(const LatticeSpec& lattice, const PotentialSpec& V, double h, int k,
                                     const SchrodingerConfig& config);

}  // namespace contlim
