#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "contlim/lattice.hpp"

namespace contlim {

using SpMat = Eigen::SparseMatrix<double>;
using CSpMat = Eigen::SparseMatrix<cplx>;

struct PowerConfig {
  int max_iterations = 50;
  double tolerance = 1e-6;  // relative change of the estimate
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
};

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;

  nlohmann::json to_json() const;
};

/// Deterministic complex Gaussian vector.
CVec random_vector(std::size_t n, std::uint64_t seed);

/// ||A|| by power iteration on A^*A. Domain and codomain must carry the same
/// quadrature weight so the plain Euclidean norm can be used.
NormEstimate power_norm(std::size_t n, const std::function<CVec(const CVec&)>& apply,
                        const std::function<CVec(const CVec&)>& apply_adjoint, const PowerConfig& config);

/// (M - z)^-1 for a real sparse M by sparse LU. Every solve checks the normwise
/// backward error ||Ax - b|| / (||A||_1 ||x|| + ||b||) against `tolerance`.
/// The conjugate shift is served by the same factorization.
class ShiftedSolver {
 public:
  ShiftedSolver(const SpMat& m, cplx z, double tolerance = 1e-10);

  CVec solve(const CVec& b) const;
  /// (M - conj z)^-1 b.
  CVec solve_conj(const CVec& b) const;
  std::size_t size() const { return static_cast<std::size_t>(shifted_.rows()); }

 private:
  CSpMat shifted_;
  double tolerance_;
  double norm_ = 0.0;  // max column sum; equals the max row sum for symmetric M
  Eigen::SparseLU<CSpMat> lu_;
};

/// Factorization of a real symmetric positive definite sparse matrix.
class SpdSolver {
 public:
  explicit SpdSolver(const SpMat& m);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

/// ||diag(potential) (M + shift)^-1|| by power iteration; M + shift must be
/// positive definite. Bounds sup ||V u|| / ||(M + shift) u||.
NormEstimate relative_bound(const SpMat& m, const Eigen::VectorXd& potential, double shift, const PowerConfig& power);

struct Eigenpairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, unit Euclidean norm
  int iterations = 0;
};

/// The k lowest eigenpairs of a real symmetric sparse matrix by shift-invert
/// subspace iteration with Rayleigh-Ritz; `shift` must lie below the spectrum.
/// Stops once the Ritz values settle and every residual is below
/// tolerance * max column sum of M.
Eigenpairs lowest_eigenpairs(const SpMat& m, int k, double shift, std::uint64_t seed = 1,
                             int max_iterations = 500, double tolerance = 1e-12);

}  // namespace contlim
