#pragma once

#include <array>
#include <vector>

#include "contlim/convergence.hpp"

namespace contlim {

/// Geometry of the hexagonal lattice with spacing h. Gamma_h = Z h f1 + Z h f2
/// is the symmetry group; Lambda^+ = Gamma_h, Lambda^- = h e3 + Gamma_h.
struct HexGeometry {
  double h = 1.0;
  std::array<Vec, 3> e;   // unit bond vectors
  std::array<Vec, 2> f;   // f_j = e_j - e3
  std::array<Vec, 2> fp;  // dual basis of (f1, f2)
  std::array<Vec, 2> ep;  // dual basis of (e1, e2)
  double omega0 = 0.0;    // sqrt(3)/2, cell volume of the triangular lattice

  /// Generator of Gamma'_1 (columns f1', f2').
  Mat gamma_dual() const;
  /// The triangular lattice spanned by e1, e2 as a point set, with its six
  /// nearest-neighbour edges (same set as the "triangular" preset).
  LatticeSpec triangular() const;
};

HexGeometry make_hex_geometry(double h);

/// phi_f(xi) = exp(2 pi i h f.xi).
cplx hex_phase(const HexGeometry& g, const Vec& f, const Vec& xi);

/// Weighted inner product <u,v> = (1/n) sum conj(u_j) v_j on C^n.
cplx weighted_inner(const CVec& u, const CVec& v);
/// Adjoint of A: C^n -> C^m w.r.t. the weighted inner products, (n/m) A^H.
CMat weighted_adjoint(const CMat& a);
/// Operator norm of A: C^n -> C^m in the weighted norms, sqrt(n/m) ||A||_2.
double weighted_norm(const CMat& a);

struct HexFiber {
  Vec xi;
  CMat Htr;        // 3x3
  CMat Hhex;       // 2x2
  CMat Theta;      // 3x2
  CMat ThetaStar;  // 2x3, weighted adjoint of Theta
};

HexFiber hex_fiber(const HexGeometry& g, const Vec& xi);

/// alpha(xi) = 1 + phi_f1 + phi_f2.
cplx hex_alpha(const HexGeometry& g, const Vec& xi);

struct HexEigenpairs {
  double E_minus = 0.0, E_plus = 0.0;
  CVec w_minus, w_plus;
};

/// Closed form h^-2 (3 -+ |alpha|), w = (1, +-conj(alpha)/|alpha|). Throws at
/// Dirac points (|alpha| < 1e-12).
HexEigenpairs hex_eigenpairs(const HexGeometry& g, const Vec& xi);

/// E_-+ only; defined everywhere including Dirac points.
std::pair<double, double> hex_bands(const HexGeometry& g, const Vec& xi);

/// h^-2 (6 - 2 sum_j cos(2 pi h e_j.xi)).
double tr_dispersion(const HexGeometry& g, const Vec& xi);

struct TrEigenpairs {
  std::array<double, 3> E;  // E_0, E_+, E_-
  std::array<CVec, 3> w;    // w_0, w_+, w_-
};

TrEigenpairs tr_eigenpairs(const HexGeometry& g, const Vec& xi);

/// min over the zone grid of h^2 E^tr_+- (a function of h xi only, so computed
/// at h = 1); `argmax` holds the minimiser.
SupResult tr_band_floor(const ScanConfig& config);

/// A field on a periodic patch of Gamma_h with n1 x n2 cells and `components`
/// values per cell (index n1 fastest, component outermost).
struct HexField {
  int n1 = 0, n2 = 0, components = 0;
  CVec values;

  cplx& at(int c, int i, int j);
  cplx at(int c, int i, int j) const;
};

HexField make_hex_field(int n1, int n2, int components);

/// Theta_h in position space: copies the two hexagonal components and fills
/// the third (site z - h e2) with the average over its six neighbours.
HexField theta_apply(const HexGeometry& g, const HexField& u);
/// H^hex_h in position space on the patch.
HexField hex_apply(const HexGeometry& g, const HexField& u);

struct HexChainReport {
  ConvergenceReport projector_defect;  // (a) (1 - Theta Theta*)(Htr/2 - mu)^-1
  ConvergenceReport intertwining;      // (b) Theta*(Htr/2 - mu)^-1 - (Hhex - mu)^-1 Theta*
  ConvergenceReport combined;          // (c) J^hex (Hhex - mu)^-1 J^hex* - (H0^hex - mu)^-1
  nlohmann::json to_json() const;
};

double hex_projector_defect(const HexGeometry& g, cplx mu, const Vec& xi);
double hex_intertwining(const HexGeometry& g, cplx mu, const Vec& xi);
/// Fiber norm of the combined difference over the bands xi + Gamma'_h;
/// `profile` must be built for the triangular lattice.
double hex_combined(const HexGeometry& g, const CutoffProfile& profile, cplx mu, const Vec& xi);

HexChainReport hex_convergence_chain(const CutoffProfile& profile, cplx mu, const std::vector<double>& h_values,
                                     const ScanConfig& config);

}  // namespace contlim
