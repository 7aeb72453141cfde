#pragma once

#include <vector>

#include "contlim/embedding.hpp"
#include "contlim/symbols.hpp"

namespace contlim {

/// Spectral norm of a small complex matrix.
double spectral_norm(const CMat& m);

/// The free resolvent difference J_h (H_{0,h} - mu)^-1 J_h^* - (H_0 - mu)^-1 on
/// the fiber over xi, restricted to the bands where phi-hat(h(xi + .)) != 0.
/// On every other band the difference is the diagonal entry -(p0 - mu)^-1;
/// `tail` is the largest modulus among those.
struct FiberBlock {
  Vec xi;
  std::vector<IVec> bands;  // dual coordinates, relative to h xi
  CMat matrix;
  double tail = 0.0;

  double norm() const { return std::max(matrix.size() ? spectral_norm(matrix) : 0.0, tail); }
};

/// Requires Im mu != 0.
FiberBlock difference_fiber(const CutoffProfile& profile, double h, cplx mu, const Vec& xi);

enum class FreeQuantity {
  resolvent_difference,  // J_h R_h J_h^* - R_0
  one_minus_JJ,          // (1 - J_h J_h^*) R_0
  adjoint_difference,    // J_h^* R_0 J_h - R_h
};

/// Fiber norm of the chosen quantity at quasimomentum xi.
double free_fiber_norm(const CutoffProfile& profile, FreeQuantity q, double h, cplx mu, const Vec& xi);

/// Supremum scans of free fiber norms with the h-independent fiber data
/// (bands, band vector, symbol values in the unit zone) cached per grid point.
class FreeFiberScan {
 public:
  FreeFiberScan(const CutoffProfile& profile, const ScanConfig& config);

  /// sup over xi in h^-1 Omega; argmax is reported in xi units.
  SupResult sup(FreeQuantity q, double h, cplx mu) const;
  const ScanConfig& config() const { return config_; }

 private:
  double cached_norm(std::size_t point, FreeQuantity q, double s, cplx mu) const;

  const CutoffProfile& profile_;
  ScanConfig config_;
  BrillouinZone zone_;
  std::vector<Vec> points_;
  std::vector<double> p0h_;        // p_{0,1}(2 pi k)
  std::vector<double> pmin_;       // min p0(2 pi (k + eta)) over inactive eta
  std::vector<std::size_t> offset_;
  std::vector<double> band_p0_;    // p0(2 pi (k + eta)) over active eta
  std::vector<double> band_u_;     // unit band vector
};

double resolvent_difference_norm(const CutoffProfile& profile, double h, cplx mu, const ScanConfig& config);
double one_minus_JJ_norm(const CutoffProfile& profile, double h, cplx mu, const ScanConfig& config);

struct ConvergenceReport {
  std::vector<double> h_values;  // strictly decreasing
  std::vector<double> norms;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;  // log norm minus fit
  nlohmann::json grid_config;

  nlohmann::json to_json() const;
};

/// Least-squares fit of log norm = slope log h + intercept.
ConvergenceReport fit_rate(std::vector<std::pair<double, double>> pairs);

/// h = 2^-k for k = kmin..kmax, largest first.
std::vector<double> dyadic_h(int kmin, int kmax);

/// Sweep of one free quantity over h, fitted.
ConvergenceReport free_convergence(const CutoffProfile& profile, FreeQuantity q, cplx mu,
                                   const std::vector<double>& h_values, const ScanConfig& config);

}  // namespace contlim
