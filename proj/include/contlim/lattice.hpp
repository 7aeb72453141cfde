#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace contlim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;
using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Radius (in integer dual coordinates) of the shell searched when certifying
/// first-Brillouin-zone membership or reducing a point into the zone. Radius 2
/// covers every built-in preset; it is not claimed for arbitrary lattices.
inline constexpr int kDualShellRadius = 2;

/// One edge generator: f^j in coordinates w.r.t. the lattice basis, with weight mu_j.
struct EdgeGenerator {
  IVec coords;
  double weight = 1.0;
};

/// A Bravais lattice L Z^d with the translation-invariant weighted graph
/// generated by {+-f^j}. Immutable once constructed.
class LatticeSpec {
 public:
  LatticeSpec(std::string name, Mat generator, std::vector<EdgeGenerator> edges);

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(generator_.rows()); }
  /// Columns are the lattice basis vectors.
  const Mat& generator() const { return generator_; }
  const std::vector<EdgeGenerator>& edges() const { return edges_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  /// Graph degree, 2K.
  int degree() const { return 2 * edge_count(); }
  /// omega_0 = |det L|.
  double cell_volume() const { return cell_volume_; }
  /// Cartesian edge vector L f^j.
  const Vec& edge_vector(int j) const { return cartesian_edges_[j]; }
  Vec to_cartesian(const IVec& coords) const { return generator_ * coords.cast<double>(); }

 private:
  std::string name_;
  Mat generator_;
  std::vector<EdgeGenerator> edges_;
  std::vector<Vec> cartesian_edges_;
  double cell_volume_ = 0.0;
};

/// Lambda' = L^{-T} Z^d.
struct DualLattice {
  Mat generator;

  int dim() const { return static_cast<int>(generator.rows()); }
  /// Volume of a fundamental domain of the dual lattice, 1/omega_0.
  double cell_volume() const { return std::abs(generator.determinant()); }
  Vec point(const IVec& n) const { return generator * n.cast<double>(); }
};

DualLattice dual(const LatticeSpec& spec);
DualLattice dual_of_generator(const Mat& generator);

enum class ZoneKind { first_brillouin, parallelepiped };

/// Nonzero integer vectors n with max_i |n_i| <= radius, in lexicographic order.
std::vector<IVec> integer_shell(int dim, int radius);

/// True if |xi| <= |xi - eta| (+ tol) for every nonzero eta in the radius-2 dual shell.
bool in_first_brillouin(const DualLattice& dual, const Vec& xi, double tol = 1e-12);

struct ZoneReduction {
  Vec reduced;
  IVec translation;  // xi = reduced + dual.point(translation)
};

/// Reduces xi modulo Lambda' into the chosen fundamental domain. The
/// parallelepiped is centred, {B t : t in [-1/2, 1/2)^d}. Ties on the
/// Wigner-Seitz boundary keep the parallelepiped representative.
ZoneReduction reduce_to_zone(const DualLattice& dual, const Vec& xi, ZoneKind kind);

/// Reusable reducer with the dual shell precomputed; same rules as reduce_to_zone.
class ZoneReducer {
 public:
  ZoneReducer(const DualLattice& dual, ZoneKind kind);
  ZoneReduction operator()(const Vec& xi) const;
  /// Cartesian shell vectors eta and their integer coordinates.
  const std::vector<Vec>& shell() const { return shell_; }
  const std::vector<IVec>& shell_coords() const { return shell_coords_; }

 private:
  DualLattice dual_;
  ZoneKind kind_;
  Mat to_coords_;
  std::vector<Vec> shell_;
  std::vector<IVec> shell_coords_;
};

/// A regular sample of one fundamental domain of Lambda' with equal weights.
struct BrillouinZone {
  DualLattice parent;
  ZoneKind kind = ZoneKind::first_brillouin;
  int points_per_axis = 0;
  std::vector<Vec> points;
  double weight = 0.0;  // per point; sums to the domain volume

  int dim() const { return parent.dim(); }
  std::size_t size() const { return points.size(); }
  double total_weight() const { return weight * static_cast<double>(points.size()); }
  /// Step vectors of the underlying grid (columns), B / points_per_axis.
  Mat grid_steps() const { return parent.generator / static_cast<double>(points_per_axis); }
};

/// Half-open grid t_i = j/n - 1/2, j = 0..n-1, mapped through the dual
/// generator and (for first_brillouin) reduced into the Wigner-Seitz cell.
BrillouinZone brillouin_zone(const DualLattice& dual, int points_per_axis,
                             ZoneKind kind = ZoneKind::first_brillouin);

/// Built-in lattices: square1, square2, square3 (also square_1 etc.),
/// triangular, tetrahedral, octahedral.
LatticeSpec make_preset(std::string_view name);
LatticeSpec make_square(int dim);
std::vector<std::string> preset_names();

/// {name, dim, generator: row-major reals, edges: [{coords, weight}]}
LatticeSpec lattice_from_json(const nlohmann::json& doc);
nlohmann::json lattice_to_json(const LatticeSpec& spec);
/// A preset name or a path to a JSON lattice document.
LatticeSpec resolve_lattice(const std::string& name_or_path);

}  // namespace contlim
