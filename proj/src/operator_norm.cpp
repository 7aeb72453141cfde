#include "contlim/operator_norm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace contlim {

nlohmann::json PowerConfig::to_json() const {
  return {{"max_iterations", max_iterations}, {"tolerance", tolerance}, {"seed", seed}};
}

nlohmann::json NormEstimate::to_json() const {
  return {{"value", value}, {"iterations", iterations}, {"converged", converged}};
}

CVec random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVec v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double re = normal(rng);
    v[i] = cplx(re, normal(rng));
  }
  return v;
}

NormEstimate power_norm(std::size_t n, const std::function<CVec(const CVec&)>& apply,
                        const std::function<CVec(const CVec&)>& apply_adjoint, const PowerConfig& config) {
  if (n == 0) throw std::invalid_argument("power iteration on an empty space");
  if (config.max_iterations < 1) throw std::invalid_argument("power iteration needs at least one step");
  CVec v = random_vector(n, config.seed);
  v.normalize();
  NormEstimate out;
  double previous = 0.0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    const CVec w = apply(v);
    const double estimate = w.norm();
    out.value = std::max(out.value, estimate);
    out.iterations = it;
    if (estimate == 0.0) {
      out.converged = true;
      break;
    }
    if (it > 1 && std::abs(estimate - previous) <= config.tolerance * estimate) {
      out.converged = true;
      break;
    }
    previous = estimate;
    v = apply_adjoint(w);
    const double len = v.norm();
    if (len == 0.0) {
      out.converged = true;
      break;
    }
    v /= len;
  }
  return out;
}

ShiftedSolver::ShiftedSolver(const SpMat& m, cplx z, double tolerance) : tolerance_(tolerance) {
  if (m.rows() != m.cols()) throw std::invalid_argument("shifted solve needs a square matrix");
  shifted_ = m.cast<cplx>();
  CSpMat id(m.rows(), m.cols());
  id.setIdentity();
  shifted_ -= z * id;
  shifted_.makeCompressed();
  lu_.analyzePattern(shifted_);
  lu_.factorize(shifted_);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("sparse LU factorization failed");
  for (Eigen::Index c = 0; c < shifted_.outerSize(); ++c) {
    double col = 0.0;
    for (CSpMat::InnerIterator it(shifted_, c); it; ++it) col += std::abs(it.value());
    norm_ = std::max(norm_, col);
  }
}

CVec ShiftedSolver::solve(const CVec& b) const {
  CVec x = lu_.solve(b);
  const double bn = b.norm();
  if (bn == 0.0) return x;
  // normwise backward error ||Ax - b|| / (||A|| ||x|| + ||b||), with one step
  // of iterative refinement when the first solve misses the tolerance
  const auto backward_error = [&](const CVec& y) {
    return (shifted_ * y - b).norm() / (norm_ * y.norm() + bn);
  };
  double err = backward_error(x);
  if (!(err <= tolerance_)) {
    x += lu_.solve(CVec(b - shifted_ * x));
    err = backward_error(x);
  }
  if (!(err <= tolerance_)) {
    std::ostringstream msg;
    msg << "sparse solve did not reach the residual tolerance (backward error " << err << ")";
    throw std::runtime_error(msg.str());
  }
  return x;
}

CVec ShiftedSolver::solve_conj(const CVec& b) const { return solve(b.conjugate()).conjugate(); }

SpdSolver::SpdSolver(const SpMat& m) {
  ldlt_.compute(m);
  if (ldlt_.info() != Eigen::Success) throw std::runtime_error("sparse LDLT factorization failed");
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const { return ldlt_.solve(b); }

NormEstimate relative_bound(const SpMat& p, const Eigen::VectorXd& potential, double shift, const PowerConfig& power) {
  const Eigen::Index n = p.rows();
  if (potential.size() != n) throw std::invalid_argument("potential has wrong size");
  SpMat shifted = p;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
  const SpdSolver solver(shifted);
  const auto solve = [&](const CVec& b) {
    const CVec re = solver.solve(b.real()).cast<cplx>();
    const CVec im = solver.solve(b.imag()).cast<cplx>();
    return CVec(re + cplx(0.0, 1.0) * im);
  };
  const auto apply = [&](const CVec& v) { return CVec(potential.cast<cplx>().cwiseProduct(solve(v))); };
  const auto adjoint = [&](const CVec& v) { return solve(potential.cast<cplx>().cwiseProduct(v)); };
  return power_norm(static_cast<std::size_t>(n), apply, adjoint, power);
}

Eigenpairs lowest_eigenpairs(const SpMat& m, int k, double shift, std::uint64_t seed, int max_iterations,
                             double tolerance) {
  const Eigen::Index n = m.rows();
  if (k < 1 || k > n) throw std::invalid_argument("requested eigenpair count out of range");
  const Eigen::Index p = std::min<Eigen::Index>(n, k + std::max(4, k / 2));
  SpMat shifted = m;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift;
  SpdSolver solver(shifted);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);

  double scale = 1.0;  // max column sum
  for (Eigen::Index j = 0; j < m.outerSize(); ++j) {
    double col = 0.0;
    for (SpMat::InnerIterator it(m, j); it; ++it) col += std::abs(it.value());
    scale = std::max(scale, col);
  }

  Eigenpairs out;
  Eigen::VectorXd previous = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::MatrixXd y(n, p);
    for (Eigen::Index j = 0; j < p; ++j) y.col(j) = solver.solve(x.col(j));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    const Eigen::MatrixXd t = q.transpose() * (m * q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (t + t.transpose()));
    x = q * es.eigenvectors();
    const Eigen::VectorXd ritz = es.eigenvalues().head(k);
    out.iterations = it;
    const double change = (ritz - previous).cwiseAbs().maxCoeff();
    previous = ritz;
    if (change > tolerance * std::max(1.0, ritz.cwiseAbs().maxCoeff())) continue;
    // eigenvalues settle quadratically faster than the vectors
    const Eigen::MatrixXd lead = x.leftCols(k);
    const Eigen::MatrixXd residual = m * lead - lead * ritz.asDiagonal();
    if (residual.colwise().norm().maxCoeff() <= tolerance * scale) break;
  }
  out.values = previous;
  out.vectors = x.leftCols(k);
  for (int j = 0; j < k; ++j) out.vectors.col(j).normalize();
  return out;
}

}  // namespace contlim
