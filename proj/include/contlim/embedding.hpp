#pragma once

#include <string>
#include <vector>

#include "contlim/lattice.hpp"

namespace contlim {

/// Tensor-product bump exp(-1/(1-t^2)), normalized to unit mass on the grid.
inline constexpr const char* kMollifierName = "tensor_bump_exp(-1/(1-t^2))";

/// 0.05 times the distance from the Wigner-Seitz boundary to the nearest
/// nonzero dual point.
double default_epsilon(const LatticeSpec& lattice);

/// Nodes per axis giving a spacing of at most eps/4.
int default_grid_res(const LatticeSpec& lattice, double eps);

/// phi-hat for a lattice: the mollified zone indicator phi0 = psi_eps * chi,
/// tabulated on a box and evaluated by multilinear interpolation, with the
/// normalization sqrt(omega0) (sum_eta phi0(xi+eta)^2)^(-1/2) applied at
/// evaluation time so it holds at every xi, not only at nodes.
class CutoffProfile {
 public:
  static CutoffProfile build(const LatticeSpec& lattice, double eps, int grid_res);
  static CutoffProfile build(const LatticeSpec& lattice);

  const LatticeSpec& lattice() const { return lattice_; }
  const DualLattice& dual() const { return dual_; }
  double eps() const { return eps_; }
  int grid_res() const { return grid_res_; }
  double cell_volume() const { return lattice_.cell_volume(); }
  /// Measured plateau radius: |phi-hat|^2 = omega0 exactly for |xi| <= r0.
  double r0() const { return r0_; }
  /// Dual coordinates of every eta with phi-hat(. + eta) not identically 0 on the zone.
  const std::vector<IVec>& band_set() const { return band_set_; }

  /// Unnormalized phi0, 0 outside the tabulation box.
  double phi0(const Vec& xi) const;
  /// sum_eta phi0(xi + eta)^2 (periodic, >= some positive floor).
  double normalizer(const Vec& xi) const;
  double phi_hat(const Vec& xi) const;
  /// |phi-hat(xi)|^2 / omega0 = phi0^2 / normalizer; exactly 1 on the plateau.
  double weight(const Vec& xi) const;

  /// Bands eta (dual coordinates, relative to k) with phi-hat(k + eta) != 0 and
  /// the unit vector phi-hat(k + eta) / sqrt(omega0) over them.
  void band_vector(const Vec& k, std::vector<IVec>& bands, std::vector<double>& values) const;

  nlohmann::json to_json() const;
  static CutoffProfile from_json(const nlohmann::json& doc);

  const Vec& box_lo() const { return box_lo_; }
  const Vec& spacing() const { return spacing_; }

 private:
  CutoffProfile(LatticeSpec lattice) : lattice_(std::move(lattice)), dual_(contlim::dual(lattice_)) {}
  void finish_setup();
  void measure_support();
  double interpolate(const Vec& xi) const;
  /// Parallelepiped reduction: xi = reduced + B shift.
  void reduce(const Vec& xi, Vec& reduced, IVec& shift) const;

  LatticeSpec lattice_;
  DualLattice dual_;
  double eps_ = 0.0;
  int grid_res_ = 0;
  double r0_ = 0.0;
  std::vector<IVec> band_set_;
  Vec box_lo_;
  Vec spacing_;
  std::vector<double> samples_;  // axis 0 fastest
  Mat to_dual_coords_;
  // Candidate shifts for a point in the centred parallelepiped.
  std::vector<IVec> candidate_coords_;
  std::vector<Vec> candidates_;
};

/// A finitely supported function on h Lambda: values at integer lattice coordinates.
struct LatticeSamples {
  double h = 1.0;
  std::vector<IVec> sites;
  CVec values;
};

/// F_h v(xi) = omega0 h^d sum_y exp(-2 pi i y.xi) v(y) at xi = zone point / h.
CVec fourier_discrete(const LatticeSpec& lattice, const LatticeSamples& v, const BrillouinZone& zone);

/// ||v||^2 = omega0 h^d sum |v|^2.
double lattice_norm(const LatticeSpec& lattice, const LatticeSamples& v);
/// L^2(h^-1 Omega) norm of values sampled at zone points / h.
double zone_norm(const CVec& values, const BrillouinZone& zone, double h);

/// Fiber action of T_h T_h^*: u (u^H g) / omega0, u_eta = phi-hat(h xi + eta),
/// over the profile's band_set. h xi must lie in the first Brillouin zone.
CVec apply_Th_fiber(const CutoffProfile& profile, double h, const Vec& xi, const CVec& g);

/// Minimum samples per lattice spacing for the continuum grid.
inline constexpr int kMinSamplesPerCell = 8;

/// J_h on a periodic box of `cells` lattice cells per axis. The continuum is
/// sampled on the finer lattice (h/samples) Lambda; J_h is exact there for the
/// band-limited range of J_h. Sites are indexed with axis 0 fastest; the
/// coarse site q sits at fine index samples*q.
class TorusEmbedding {
 public:
  TorusEmbedding(const CutoffProfile& profile, double h, int cells, int samples);

  int dim() const { return dim_; }
  double h() const { return h_; }
  int cells() const { return cells_; }
  int samples() const { return samples_; }
  std::size_t coarse_size() const { return coarse_size_; }
  std::size_t fine_size() const { return fine_size_; }
  /// Quadrature weights omega0 h^d and omega0 (h/samples)^d.
  double coarse_weight() const { return coarse_weight_; }
  double fine_weight() const { return fine_weight_; }

  CVec apply(const CVec& v) const;
  CVec adjoint(const CVec& u) const;

  double coarse_norm(const CVec& v) const { return std::sqrt(coarse_weight_) * v.norm(); }
  double fine_norm(const CVec& u) const { return std::sqrt(fine_weight_) * u.norm(); }

 private:
  int dim_;
  double h_;
  int cells_;
  int samples_;
  std::size_t coarse_size_;
  std::size_t fine_size_;
  double coarse_weight_;
  double fine_weight_;
  double sqrt_omega0_;
  std::vector<cplx> kernel_hat_;  // DFT of the kernel over fine offsets
};

}  // namespace contlim
