#include "contlim/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "contlim/parallel.hpp"

namespace contlim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Runs f(i) for i in [0, n) through the worker pool; the first exception is
// rethrown on the calling thread.
void for_each_point(std::size_t n, const std::function<void(std::size_t)>& f) {
  std::vector<std::exception_ptr> errors(n);
  parallel_chunks(n, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

bool is_integer_multiple(double value, double unit) {
  const double q = value / unit;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q) && std::round(q) >= 1.0;
}

SpMat diagonal_matrix(const Eigen::VectorXd& d) {
  SpMat m(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// CoefficientField

CoefficientField::CoefficientField(std::vector<std::vector<std::string>> a, const std::string& V, double c0,
                                   double M, double L)
    : dim_(static_cast<int>(a.size())), V_(V), c0_(c0), M_(M), L_(L), source_(std::move(a)) {
  if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("coefficient matrix must be d x d with 1 <= d <= 3");
  for (const auto& row : source_)
    if (static_cast<int>(row.size()) != dim_) throw std::invalid_argument("coefficient matrix must be square");
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k < j; ++k)
      if (source_[j][k] != source_[k][j])
        throw std::invalid_argument("coefficient matrix must be symmetric: a" + std::to_string(j + 1) +
                                    std::to_string(k + 1) + " differs from a" + std::to_string(k + 1) +
                                    std::to_string(j + 1));
  if (!(c0 > 0.0)) throw std::invalid_argument("ellipticity constant c0 must be positive");
  if (!(L > 0.0)) throw std::invalid_argument("period L must be positive");
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k <= j; ++k) entries_.emplace_back(source_[j][k]);
}

CoefficientField CoefficientField::identity(int dim, double L) {
  std::vector<std::vector<std::string>> a(dim, std::vector<std::string>(dim, "0"));
  for (int j = 0; j < dim; ++j) a[j][j] = "1";
  return CoefficientField(std::move(a), "0", 1.0, 0.0, L);
}

CoefficientField CoefficientField::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("a")) throw std::invalid_argument("coefficient document needs an \"a\" matrix");
  std::vector<std::vector<std::string>> a;
  for (const auto& row : doc.at("a")) {
    std::vector<std::string> r;
    for (const auto& e : row) r.push_back(e.is_string() ? e.get<std::string>() : e.dump());
    a.push_back(std::move(r));
  }
  std::string V = "0";
  if (doc.contains("V")) V = doc["V"].is_string() ? doc["V"].get<std::string>() : doc["V"].dump();
  return CoefficientField(std::move(a), V, doc.value("c0", 1.0), doc.value("M", 0.0), doc.value("L", 2.0));
}

CoefficientField CoefficientField::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open coefficient file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("coefficient file " + path + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json CoefficientField::to_json() const {
  return {{"a", source_}, {"V", V_.text()}, {"c0", c0_}, {"M", M_}, {"L", L_}};
}

const Formula& CoefficientField::entry(int j, int k) const {
  if (j < k) std::swap(j, k);
  return entries_[static_cast<std::size_t>(j * (j + 1) / 2 + k)];
}

double CoefficientField::a(int j, int k, const Vec& x) const {
  return entry(j, k)(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), L_);
}

Mat CoefficientField::a_matrix(const Vec& x) const {
  Mat m(dim_, dim_);
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k <= j; ++k) m(j, k) = m(k, j) = a(j, k, x);
  return m;
}

double CoefficientField::V(const Vec& x) const {
  return V_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), L_);
}

bool CoefficientField::diagonal() const {
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k < j; ++k)
      if (entry(j, k).text() != "0") return false;
  return true;
}

double CoefficientField::min_ellipticity(const std::vector<Vec>& points) const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a_matrix(x), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()[0]);
  }
  return lo;
}

double CoefficientField::derivative_bound(const std::vector<Vec>& points, double step) const {
  double out = 0.0;
  for (const auto& x : points) {
    for (int i = 0; i < dim_; ++i) {
      Vec xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k <= j; ++k) out = std::max(out, std::abs(a(j, k, xp) - a(j, k, xm)) / (2.0 * step));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Torus

std::size_t EllipticTorus::size() const {
  std::size_t s = 1;
  for (int i = 0; i < dim; ++i) s *= static_cast<std::size_t>(n);
  return s;
}

Vec EllipticTorus::position(std::size_t site) const {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) {
    x[i] = h * static_cast<double>(site % n);
    site /= n;
  }
  return x;
}

std::vector<Vec> EllipticTorus::positions() const {
  std::vector<Vec> out;
  out.reserve(size());
  for (std::size_t s = 0; s < size(); ++s) out.push_back(position(s));
  return out;
}

std::size_t EllipticTorus::shift(std::size_t site, int j, int step) const {
  std::size_t stride = 1;
  for (int i = 0; i < j; ++i) stride *= static_cast<std::size_t>(n);
  const long c = static_cast<long>((site / stride) % n);
  long moved = (c + step) % n;
  if (moved < 0) moved += n;
  return site + static_cast<std::size_t>(moved - c) * stride;
}

EllipticTorus make_elliptic_torus(int dim, double h, double side) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("torus dimension must be 1, 2 or 3");
  if (!(h > 0.0)) throw std::invalid_argument("lattice spacing h must be positive");
  if (!is_integer_multiple(side, h)) throw std::invalid_argument("torus side must be a multiple of h");
  EllipticTorus t;
  t.dim = dim;
  t.h = h;
  t.n = static_cast<int>(std::lround(side / h));
  if (t.n < 3) throw std::invalid_argument("torus needs at least 3 sites per axis");
  return t;
}

std::string variant_name(EllipticVariant v) {
  switch (v) {
    case EllipticVariant::P_plus: return "P_plus";
    case EllipticVariant::P_minus: return "P_minus";
    case EllipticVariant::H0h: return "H0h";
    case EllipticVariant::Q_plus: return "Q_plus";
    case EllipticVariant::Q_minus: return "Q_minus";
  }
  return "unknown";
}

EllipticVariant parse_variant(const std::string& name) {
  for (auto v : {EllipticVariant::P_plus, EllipticVariant::P_minus, EllipticVariant::H0h, EllipticVariant::Q_plus,
                 EllipticVariant::Q_minus}) {
    if (variant_name(v) == name) return v;
  }
  if (name == "plus" || name == "+") return EllipticVariant::P_plus;
  if (name == "minus" || name == "-") return EllipticVariant::P_minus;
  throw std::invalid_argument("unknown operator variant " + name);
}

// ---------------------------------------------------------------------------
// Differences and assembly

CVec difference_apply(int sign, int j, const EllipticTorus& torus, const CVec& u) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("difference sign must be +1 or -1");
  if (j < 0 || j >= torus.dim) throw std::invalid_argument("difference direction j out of range");
  if (static_cast<std::size_t>(u.size()) != torus.size()) throw std::invalid_argument("field has wrong size");
  const cplx inv = 1.0 / cplx(0.0, torus.h);
  CVec out(u.size());
  for (std::size_t s = 0; s < torus.size(); ++s) {
    if (sign > 0) {
      out[s] = (u[torus.shift(s, j, 1)] - u[s]) * inv;
    } else {
      out[s] = (u[s] - u[torus.shift(s, j, -1)]) * inv;
    }
  }
  return out;
}

SpMat difference_stencil(int sign, int j, const EllipticTorus& torus) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("difference sign must be +1 or -1");
  if (j < 0 || j >= torus.dim) throw std::invalid_argument("difference direction j out of range");
  const std::size_t n = torus.size();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * n);
  for (std::size_t s = 0; s < n; ++s) {
    if (sign > 0) {
      t.emplace_back(s, torus.shift(s, j, 1), 1.0);
      t.emplace_back(s, s, -1.0);
    } else {
      t.emplace_back(s, s, 1.0);
      t.emplace_back(s, torus.shift(s, j, -1), -1.0);
    }
  }
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

TorusOperator assemble(const CoefficientField& coeffs, const EllipticTorus& torus, EllipticVariant variant) {
  const bool free = variant == EllipticVariant::H0h;
  if (!free) {
    if (coeffs.dim() != torus.dim) throw std::invalid_argument("coefficient dimension does not match the torus");
    if (!is_integer_multiple(torus.n * torus.h, coeffs.period()))
      throw std::invalid_argument("torus side must be a multiple of the coefficient period L");
  }
  const int d = torus.dim;
  const int sign = (variant == EllipticVariant::P_minus || variant == EllipticVariant::Q_minus) ? -1 : 1;
  const bool with_v = variant == EllipticVariant::P_plus || variant == EllipticVariant::P_minus;
  const auto sites = torus.positions();
  const std::size_t n = sites.size();

  if (!free) {
    for (const auto& x : sites) {
      Eigen::SelfAdjointEigenSolver<Mat> es(coeffs.a_matrix(x), Eigen::EigenvaluesOnly);
      if (es.eigenvalues()[0] < coeffs.c0() * (1.0 - 1e-12)) {
        throw std::invalid_argument("ellipticity violated at x = (" + std::to_string(x[0]) +
                                    (d > 1 ? ", ..." : "") + "): smallest eigenvalue " +
                                    std::to_string(es.eigenvalues()[0]) + " < c0 = " + std::to_string(coeffs.c0()));
      }
    }
  }

  std::vector<SpMat> delta;
  for (int j = 0; j < d; ++j) delta.push_back(difference_stencil(sign, j, torus));
  const double inv_h2 = 1.0 / (torus.h * torus.h);
  SpMat out(n, n);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k <= j; ++k) {
      Eigen::VectorXd ajk(n);
      for (std::size_t s = 0; s < n; ++s) ajk[s] = free ? (j == k ? 1.0 : 0.0) : coeffs.a(j, k, sites[s]);
      if (ajk.isZero(0.0)) continue;
      const SpMat x = SpMat(delta[j].transpose()) * diagonal_matrix(ajk) * delta[k];
      if (j == k) {
        out += inv_h2 * x;
      } else {
        out += inv_h2 * (x + SpMat(x.transpose()));
      }
    }
  }
  if (with_v) {
    Eigen::VectorXd v(n);
    for (std::size_t s = 0; s < n; ++s) v[s] = coeffs.V(sites[s]);
    out += diagonal_matrix(v);
  }
  out.prune(0.0);
  out.makeCompressed();
  return TorusOperator{torus, variant, std::move(out)};
}

double difference_form(const CoefficientField& coeffs, const EllipticTorus& torus, int sign, bool with_potential,
                       const CVec& u) {
  const int d = torus.dim;
  std::vector<CVec> du;
  for (int j = 0; j < d; ++j) du.push_back(difference_apply(sign, j, torus, u));
  double total = 0.0;
  for (std::size_t s = 0; s < torus.size(); ++s) {
    const Vec x = torus.position(s);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) total += coeffs.a(j, k, x) * std::real(std::conj(du[j][s]) * du[k][s]);
    if (with_potential) total += coeffs.V(x) * std::norm(u[s]);
  }
  return total;
}

double edge_form(const CoefficientField& coeffs, const EllipticTorus& torus, int sign, const CVec& u) {
  if (!coeffs.diagonal()) throw std::invalid_argument("edge form needs diagonal coefficients");
  if (sign != 1 && sign != -1) throw std::invalid_argument("difference sign must be +1 or -1");
  const double inv_h2 = 1.0 / (torus.h * torus.h);
  double total = 0.0;
  for (std::size_t s = 0; s < torus.size(); ++s) {
    for (int j = 0; j < torus.dim; ++j) {
      const std::size_t t = torus.shift(s, j, 1);  // edge (s, t)
      const Vec where = torus.position(sign > 0 ? s : t);
      total += inv_h2 * coeffs.a(j, j, where) * std::norm(u[s] - u[t]);
    }
    total += coeffs.V(torus.position(s)) * std::norm(u[s]);
  }
  return total;
}

double quadratic_form(const SpMat& m, const CVec& u) { return std::real(u.dot(m.cast<cplx>() * u)); }

cplx difference_symbol(int sign, double h, double xi_j) {
  if (!(h > 0.0)) throw std::invalid_argument("lattice spacing h must be positive");
  const cplx ih(0.0, h);
  if (sign > 0) return (std::polar(1.0, kTwoPi * h * xi_j) - 1.0) / ih;
  if (sign < 0) return (1.0 - std::polar(1.0, -kTwoPi * h * xi_j)) / ih;
  throw std::invalid_argument("difference sign must be +1 or -1");
}

SymbolRatio difference_symbol_ratio(int dim, double h, int points_per_axis) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (points_per_axis < 2) throw std::invalid_argument("symbol grid needs at least 2 points per axis");
  SymbolRatio out;
  out.h = h;
  out.argmax = Vec::Zero(dim);
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(points_per_axis);
  Vec xi(dim);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (int i = 0; i < dim; ++i) {
      xi[i] = -1.0 + 2.0 * static_cast<double>(c % points_per_axis) / (points_per_axis - 1);
      c /= points_per_axis;
    }
    const double r2 = xi.squaredNorm();
    if (r2 > 1.0 || r2 == 0.0) continue;
    for (int sign : {1, -1}) {
      for (int j = 0; j < dim; ++j) {
        const double ratio = std::abs(difference_symbol(sign, h, xi[j]) - kTwoPi * xi[j]) / (h * r2);
        if (ratio > out.value) {
          out.value = ratio;
          out.argmax = xi;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elliptic estimate

nlohmann::json EllipticEstimateConfig::to_json() const {
  return {{"h_values", h_values}, {"side", side},     {"variant", variant_name(variant)},
          {"c2_ladder", c2_ladder}, {"trials", trials}, {"seed", seed},
          {"max_iterations", max_iterations}, {"tolerance", tolerance}};
}

constexpr Eigen::Index kBlockSize = 6;

double estimate_c1(const SpMat& p, const SpMat& h0, const EllipticTorus& torus, double c2, int trials,
                   std::uint64_t seed, int max_iterations, double tolerance) {
  const Eigen::Index n = p.rows();
  const auto ratio = [&](const Eigen::VectorXd& u) {
    const double den = (h0 * u).squaredNorm();
    if (den <= 1e-300) return std::numeric_limits<double>::infinity();
    return ((p * u).squaredNorm() + c2 * u.squaredNorm()) / den;
  };
  std::vector<Eigen::VectorXd> candidates;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
    candidates.push_back(u);
  }
  // plane waves along each axis, lowest to highest octave, and the checkerboard
  std::vector<Vec> sites = torus.positions();
  const double side = torus.h * torus.n;
  for (int axis = 0; axis < torus.dim; ++axis) {
    for (int m = 1; m <= torus.n / 2; m *= 2) {
      Eigen::VectorXd c(n), s(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        c[i] = std::cos(kTwoPi * m * sites[i][axis] / side);
        s[i] = std::sin(kTwoPi * m * sites[i][axis] / side);
      }
      candidates.push_back(c);
      candidates.push_back(s);
    }
  }
  {
    Eigen::VectorXd alt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      long parity = 0;
      for (int axis = 0; axis < torus.dim; ++axis) parity += std::lround(sites[i][axis] / torus.h);
      alt[i] = (parity % 2 == 0) ? 1.0 : -1.0;
    }
    candidates.push_back(alt);
  }
  for (int q = 0; q < 4; ++q) {
    Eigen::VectorXd spike = Eigen::VectorXd::Zero(n);
    spike[(n * q) / 4] = 1.0;
    candidates.push_back(spike);
  }
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < candidates.size(); ++i) ranked.emplace_back(ratio(candidates[i]), i);
  std::sort(ranked.begin(), ranked.end());
  double best = ranked.front().first;

  // block iteration for the top of the pencil (B, A), A = P^T P + c2,
  // B = H0^T H0, with Rayleigh-Ritz on the block; c1 = 1 / lambda_max
  SpMat a = SpMat(p.transpose()) * p;
  for (Eigen::Index i = 0; i < n; ++i) a.coeffRef(i, i) += c2;
  const SpMat b = SpMat(h0.transpose()) * h0;
  SpdSolver solver(a);
  const Eigen::Index k = std::min<Eigen::Index>(kBlockSize, n);
  Mat x(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const std::size_t pick = static_cast<std::size_t>(j) < ranked.size() ? ranked[j].second : 0;
    x.col(j) = candidates[pick];
    if (j >= static_cast<Eigen::Index>(ranked.size())) x.col(j) = Eigen::VectorXd::NullaryExpr(n, [&] { return normal(rng); });
  }
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iterations; ++it) {
    Mat y(n, k);
    for (Eigen::Index j = 0; j < k; ++j) y.col(j) = solver.solve(b * x.col(j));
    Eigen::HouseholderQR<Mat> qr(y);
    x = qr.householderQ() * Mat::Identity(n, k);
    const Mat ax = a * x, bx = b * x;
    const Mat sa = x.transpose() * ax, sb = x.transpose() * bx;
    // Ritz pairs of (sb, sa); sa is positive definite
    const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (sb + sb.transpose()), 0.5 * (sa + sa.transpose()));
    x = x * es.eigenvectors();
    Eigen::Index top = 0;
    es.eigenvalues().maxCoeff(&top);
    const double r = ratio(x.col(top));
    best = std::min(best, r);
    if (std::abs(previous - r) <= tolerance * r) break;
    previous = r;
  }
  return best;
}

nlohmann::json EllipticEstimateReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) rows_json.push_back({{"h", r.h}, {"n", r.n}, {"c1", r.c1}});
  return {{"config", config},       {"c2_ladder", c2_ladder}, {"rows", rows_json},
          {"c1_uniform", c1_uniform}, {"c2_est", c2_est},       {"c1_est", c1_est}};
}

EllipticEstimateReport elliptic_estimate_check(const CoefficientField& coeffs, const EllipticEstimateConfig& config) {
  if (config.h_values.empty()) throw std::invalid_argument("elliptic estimate needs at least one h");
  if (config.c2_ladder.empty()) throw std::invalid_argument("elliptic estimate needs a c2 ladder");
  for (double c2 : config.c2_ladder)
    if (!(c2 > 0.0)) throw std::invalid_argument("c2 ladder entries must be positive");
  EllipticEstimateReport report;
  report.c2_ladder = config.c2_ladder;
  report.config = config.to_json();
  report.config["coefficients"] = coeffs.to_json();
  report.rows.resize(config.h_values.size());
  for_each_point(config.h_values.size(), [&](std::size_t i) {
    const double h = config.h_values[i];
    const EllipticTorus torus = make_elliptic_torus(coeffs.dim(), h, config.side);
    const TorusOperator p = assemble(coeffs, torus, config.variant);
    const TorusOperator h0 = assemble(coeffs, torus, EllipticVariant::H0h);
    EllipticEstimateRow row;
    row.h = h;
    row.n = torus.n;
    for (double c2 : config.c2_ladder)
      row.c1.push_back(estimate_c1(p.matrix, h0.matrix, torus, c2, config.trials, config.seed + i, config.max_iterations,
                                   config.tolerance));
    report.rows[i] = std::move(row);
  });
  for (std::size_t l = 0; l < config.c2_ladder.size(); ++l) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& r : report.rows) lo = std::min(lo, r.c1[l]);
    report.c1_uniform.push_back(lo);
  }
  const double top = *std::max_element(report.c1_uniform.begin(), report.c1_uniform.end());
  for (std::size_t l = 0; l < config.c2_ladder.size(); ++l) {
    if (report.c1_uniform[l] >= 0.5 * top) {
      report.c2_est = config.c2_ladder[l];
      report.c1_est = report.c1_uniform[l];
      break;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Resolvent convergence

nlohmann::json EllipticConvergenceConfig::to_json() const {
  return {{"z", {z.real(), z.imag()}},
          {"h_values", h_values},
          {"side", side},
          {"ref_factor", ref_factor},
          {"variant", variant_name(variant)},
          {"reference", "resolvent of (P_plus + P_minus)/2 at spacing h/ref_factor"},
          {"power_iteration", power.to_json()}};
}

nlohmann::json EllipticConvergenceReport::to_json() const {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : estimates) est.push_back(e.to_json());
  return {{"config", config}, {"fit", fit.to_json()}, {"power_iteration", est}};
}

NormEstimate elliptic_resolvent_difference(const CoefficientField& coeffs, const CutoffProfile& profile, double h,
                                           const EllipticConvergenceConfig& config) {
  if (config.z.imag() == 0.0) throw std::invalid_argument("z must be non-real");
  if (config.ref_factor < kMinSamplesPerCell)
    throw std::invalid_argument("ref_factor must be at least " + std::to_string(kMinSamplesPerCell));
  const int d = coeffs.dim();
  const Mat& gen = profile.lattice().generator();
  if (gen.rows() != d || !gen.isApprox(Mat::Identity(d, d)))
    throw std::invalid_argument("elliptic convergence needs the cutoff profile of the square lattice");

  const EllipticTorus coarse = make_elliptic_torus(d, h, config.side);
  const EllipticTorus fine = make_elliptic_torus(d, h / config.ref_factor, config.side);
  const TorusOperator ph = assemble(coeffs, coarse, config.variant);
  const SpMat pref = 0.5 * (assemble(coeffs, fine, EllipticVariant::P_plus).matrix +
                            assemble(coeffs, fine, EllipticVariant::P_minus).matrix);
  const ShiftedSolver rh(ph.matrix, config.z);
  const ShiftedSolver rref(pref, config.z);
  const TorusEmbedding j(profile, h, coarse.n, config.ref_factor);

  const auto apply = [&](const CVec& v) { return CVec(j.apply(rh.solve(j.adjoint(v))) - rref.solve(v)); };
  const auto adjoint = [&](const CVec& v) {
    return CVec(j.apply(rh.solve_conj(j.adjoint(v))) - rref.solve_conj(v));
  };
  return power_norm(j.fine_size(), apply, adjoint, config.power);
}

EllipticConvergenceReport elliptic_convergence(const CoefficientField& coeffs, const CutoffProfile& profile,
                                               const EllipticConvergenceConfig& config) {
  if (config.h_values.size() < 3) throw std::invalid_argument("convergence sweep needs at least 3 values of h");
  EllipticConvergenceReport report;
  report.config = config.to_json();
  report.config["coefficients"] = coeffs.to_json();
  report.estimates.resize(config.h_values.size());
  for_each_point(config.h_values.size(), [&](std::size_t i) {
    report.estimates[i] = elliptic_resolvent_difference(coeffs, profile, config.h_values[i], config);
  });
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < config.h_values.size(); ++i)
    pairs.emplace_back(config.h_values[i], report.estimates[i].value);
  report.fit = fit_rate(pairs);
  report.fit.grid_config = report.config;
  return report;
}

}  // namespace contlim
