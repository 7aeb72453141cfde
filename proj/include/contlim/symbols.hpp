#pragma once

#include <functional>

#include "contlim/lattice.hpp"

namespace contlim {

/// p_0(2 pi xi) = sum_j mu_j (f^j . 2 pi xi)^2.
double eval_p0(const LatticeSpec& lattice, const Vec& xi);

/// p_{0,h}(2 pi xi) = 2 h^-2 sum_j mu_j (1 - cos(h f^j . 2 pi xi)).
double eval_p0h(const LatticeSpec& lattice, double h, const Vec& xi);

/// Upper bound 4 h^-2 sum_j mu_j of the discrete symbol.
double p0h_upper_bound(const LatticeSpec& lattice, double h);

/// Matrix Q with p_0(2 pi xi) = xi^T Q xi.
Mat p0_quadratic_form(const LatticeSpec& lattice);

/// A scalar Fourier multiplier: evaluation closure plus what it represents.
class ScalarSymbol {
 public:
  enum class Kind { continuum_p0, discrete_p0h, resolvent_of };

  static ScalarSymbol continuum(const LatticeSpec& lattice);
  static ScalarSymbol discrete(const LatticeSpec& lattice, double h);
  /// (base(xi) - mu)^-1; mu must be non-real.
  static ScalarSymbol resolvent(const ScalarSymbol& base, cplx mu);

  cplx operator()(const Vec& xi) const { return eval_(xi); }
  Kind kind() const { return kind_; }
  double h() const { return h_; }
  cplx mu() const { return mu_; }
  const std::string& description() const { return description_; }

 private:
  Kind kind_ = Kind::continuum_p0;
  double h_ = 0.0;
  cplx mu_{};
  std::string description_;
  std::function<cplx(const Vec&)> eval_;
};

/// Resolution of a supremum scan over a fundamental domain.
struct ScanConfig {
  int points_per_axis = 64;
  int refine_rounds = 3;
  int subdivision = 8;
  /// Extra copies of the grid shrunk by 2^-l, l = 1..zoom_levels, around 0.
  int zoom_levels = 0;

  nlohmann::json to_json() const;
};

struct SupResult {
  double value = 0.0;
  Vec argmax;
  ScanConfig config;

  nlohmann::json to_json() const;
};

/// The points a scan evaluates before refinement: the zone grid, then the
/// zoom copies in order of level.
std::vector<Vec> scan_points(const BrillouinZone& zone, int zoom_levels);

/// Local refinement: `rounds` times, evaluates f on the (2s+1)^d lattice of
/// spacing step/s around the current maximiser (s = subdivision) and keeps
/// the best point. Never decreases the value.
SupResult refine_sup(const std::function<double(const Vec&)>& f, double value, const Vec& argmax,
                     const Mat& steps, int rounds, int subdivision);

/// sup of f over scale * (zone grid + zoom copies), refined around the
/// maximiser. Monotone nondecreasing in refine_rounds.
SupResult sup_over_zone(const std::function<double(const Vec&)>& f, const BrillouinZone& zone,
                        const ScanConfig& config, double scale = 1.0);

/// Shorthand matching the common call: default grid of `zone`, `refine` rounds.
SupResult sup_over_zone(const std::function<double(const Vec&)>& f, const BrillouinZone& zone,
                        int refine);

}  // namespace contlim
