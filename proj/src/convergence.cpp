#include "contlim/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "contlim/parallel.hpp"

namespace contlim {

namespace {

void require_nonreal(cplx mu) {
  if (mu.imag() == 0.0) throw std::invalid_argument("spectral parameter mu must be non-real");
}

double quad(const Mat& q, const Vec& x) { return x.dot(q * x); }

// Moduli |(s p - mu)^-1| over the inactive shell, largest one.
double tail_from_shell(const CutoffProfile& profile, const Mat& q, const Vec& k,
                       const std::vector<IVec>& active, double s, cplx mu) {
  const int d = profile.lattice().dim();
  double best = 0.0;
  auto consider = [&](const IVec& n) {
    for (const auto& a : active) {
      if (a == n) return;
    }
    const double p = quad(q, k + profile.dual().point(n));
    best = std::max(best, 1.0 / std::abs(s * p - mu));
  };
  consider(IVec::Zero(d));
  for (const auto& n : integer_shell(d, kDualShellRadius + 1)) consider(n);
  return best;
}

// min p0(2 pi (k + eta)) over eta outside `active`.
double inactive_min(const CutoffProfile& profile, const Mat& q, const Vec& k, const std::vector<IVec>& active) {
  const int d = profile.lattice().dim();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const IVec& n) {
    for (const auto& a : active) {
      if (a == n) return;
    }
    best = std::min(best, quad(q, k + profile.dual().point(n)));
  };
  consider(IVec::Zero(d));
  for (const auto& n : integer_shell(d, kDualShellRadius + 1)) consider(n);
  return best;
}

// Norm of the active block for the chosen quantity. u is a real unit vector.
double block_norm(FreeQuantity quantity, const double* u, const double* p0, std::size_t n, double s,
                  double p0h, cplx mu) {
  const cplx r = 1.0 / (s * p0h - mu);
  if (quantity == FreeQuantity::adjoint_difference) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += u[i] * u[i] / (s * p0[i] - mu);
    return std::abs(acc - r);
  }
  if (n == 1) {
    const cplx dd = 1.0 / (s * p0[0] - mu);
    // u = (1): r - d, and (1 - u u^T) d = 0
    return quantity == FreeQuantity::resolvent_difference ? std::abs(r - dd) : 0.0;
  }
  CMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const cplx dd = 1.0 / (s * p0[i] - mu);
    for (std::size_t j = 0; j < n; ++j) {
      if (quantity == FreeQuantity::resolvent_difference) {
        m(i, j) = r * u[i] * u[j];
        if (i == j) m(i, j) -= dd;
      } else {
        const cplx dj = 1.0 / (s * p0[j] - mu);
        m(i, j) = ((i == j ? 1.0 : 0.0) - u[i] * u[j]) * dj;
      }
    }
  }
  return spectral_norm(m);
}

}  // namespace

double spectral_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  const CMat g = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

FiberBlock difference_fiber(const CutoffProfile& profile, double h, cplx mu, const Vec& xi) {
  require_nonreal(mu);
  if (!(h > 0.0)) throw std::invalid_argument("difference_fiber requires h > 0");
  const LatticeSpec& lat = profile.lattice();
  const Vec k = h * xi;
  if (!in_first_brillouin(profile.dual(), k, 1e-9)) {
    throw std::invalid_argument("difference_fiber: h*xi lies outside the Brillouin zone");
  }
  const double s = 1.0 / (h * h);
  FiberBlock out;
  out.xi = xi;
  std::vector<double> u;
  profile.band_vector(k, out.bands, u);
  const std::size_t n = out.bands.size();
  const cplx r = 1.0 / (s * eval_p0h(lat, 1.0, k) - mu);
  out.matrix.resize(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.matrix(i, j) = r * u[i] * u[j];
    const Vec kb = k + profile.dual().point(out.bands[i]);
    out.matrix(i, i) -= 1.0 / (s * eval_p0(lat, kb) - mu);
  }
  const Mat q = p0_quadratic_form(lat);
  out.tail = tail_from_shell(profile, q, k, out.bands, s, mu);
  return out;
}

double free_fiber_norm(const CutoffProfile& profile, FreeQuantity quantity, double h, cplx mu, const Vec& xi) {
  require_nonreal(mu);
  if (!(h > 0.0)) throw std::invalid_argument("free_fiber_norm requires h > 0");
  const LatticeSpec& lat = profile.lattice();
  const Vec k = h * xi;
  const double s = 1.0 / (h * h);
  std::vector<IVec> bands;
  std::vector<double> u;
  profile.band_vector(k, bands, u);
  std::vector<double> p0(bands.size());
  for (std::size_t i = 0; i < bands.size(); ++i) p0[i] = eval_p0(lat, k + profile.dual().point(bands[i]));
  const double block = block_norm(quantity, u.data(), p0.data(), u.size(), s, eval_p0h(lat, 1.0, k), mu);
  if (quantity == FreeQuantity::adjoint_difference) return block;
  const Mat q = p0_quadratic_form(lat);
  return std::max(block, tail_from_shell(profile, q, k, bands, s, mu));
}

FreeFiberScan::FreeFiberScan(const CutoffProfile& profile, const ScanConfig& config)
    : profile_(profile), config_(config) {
  zone_ = brillouin_zone(profile.dual(), config.points_per_axis, ZoneKind::first_brillouin);
  points_ = scan_points(zone_, config.zoom_levels);
  const std::size_t n = points_.size();
  const LatticeSpec& lat = profile.lattice();
  const Mat q = p0_quadratic_form(lat);
  p0h_.resize(n);
  pmin_.resize(n);
  std::vector<std::vector<double>> bp(n), bu(n);
  parallel_chunks(n, [&](std::size_t begin, std::size_t end, int) {
    std::vector<IVec> bands;
    for (std::size_t i = begin; i < end; ++i) {
      const Vec& k = points_[i];
      profile.band_vector(k, bands, bu[i]);
      bp[i].resize(bands.size());
      for (std::size_t b = 0; b < bands.size(); ++b) bp[i][b] = quad(q, k + profile.dual().point(bands[b]));
      p0h_[i] = eval_p0h(lat, 1.0, k);
      pmin_[i] = inactive_min(profile, q, k, bands);
    }
  });
  offset_.resize(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offset_[i + 1] = offset_[i] + bu[i].size();
  band_p0_.reserve(offset_[n]);
  band_u_.reserve(offset_[n]);
  for (std::size_t i = 0; i < n; ++i) {
    band_p0_.insert(band_p0_.end(), bp[i].begin(), bp[i].end());
    band_u_.insert(band_u_.end(), bu[i].begin(), bu[i].end());
  }
}

double FreeFiberScan::cached_norm(std::size_t i, FreeQuantity quantity, double s, cplx mu) const {
  const std::size_t n = offset_[i + 1] - offset_[i];
  const double block =
      block_norm(quantity, &band_u_[offset_[i]], &band_p0_[offset_[i]], n, s, p0h_[i], mu);
  if (quantity == FreeQuantity::adjoint_difference) return block;
  const double pmin = pmin_[i];
  double tail;
  if (s * pmin >= mu.real()) {
    tail = 1.0 / std::abs(s * pmin - mu);
  } else {
    std::vector<IVec> bands;
    std::vector<double> u;
    profile_.band_vector(points_[i], bands, u);
    tail = tail_from_shell(profile_, p0_quadratic_form(profile_.lattice()), points_[i], bands, s, mu);
  }
  return std::max(block, tail);
}

SupResult FreeFiberScan::sup(FreeQuantity quantity, double h, cplx mu) const {
  require_nonreal(mu);
  if (!(h > 0.0)) throw std::invalid_argument("sup requires h > 0");
  const double s = 1.0 / (h * h);
  const IndexedMax m = parallel_max(points_.size(), [&](std::size_t i) { return cached_norm(i, quantity, s, mu); });
  const int level = static_cast<int>(m.index / zone_.size());
  const Mat steps = std::ldexp(1.0, -level) * zone_.grid_steps() / h;
  auto f = [&](const Vec& xi) { return free_fiber_norm(profile_, quantity, h, mu, xi); };
  SupResult out = refine_sup(f, m.value, points_[m.index] / h, steps, config_.refine_rounds, config_.subdivision);
  out.config = config_;
  return out;
}

double resolvent_difference_norm(const CutoffProfile& profile, double h, cplx mu, const ScanConfig& config) {
  return FreeFiberScan(profile, config).sup(FreeQuantity::resolvent_difference, h, mu).value;
}

double one_minus_JJ_norm(const CutoffProfile& profile, double h, cplx mu, const ScanConfig& config) {
  return FreeFiberScan(profile, config).sup(FreeQuantity::one_minus_JJ, h, mu).value;
}

nlohmann::json ConvergenceReport::to_json() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < h_values.size(); ++i) pairs.push_back({h_values[i], norms[i]});
  return {{"pairs", pairs},
          {"slope", slope},
          {"intercept", intercept},
          {"r_squared", r_squared},
          {"residuals", residuals},
          {"grid_config", grid_config}};
}

ConvergenceReport fit_rate(std::vector<std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("fit_rate needs at least 3 (h, norm) pairs");
  for (const auto& [h, v] : pairs) {
    if (!(h > 0.0)) throw std::invalid_argument("fit_rate: h values must be positive");
    if (!(v > 0.0)) throw std::invalid_argument("fit_rate: norms must be positive");
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i].first == pairs[i - 1].first) throw std::invalid_argument("fit_rate: repeated h value");
  }
  const std::size_t n = pairs.size();
  ConvergenceReport rep;
  Mat a(n, 2);
  Vec b(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.h_values.push_back(pairs[i].first);
    rep.norms.push_back(pairs[i].second);
    a(i, 0) = std::log(pairs[i].first);
    a(i, 1) = 1.0;
    b[i] = std::log(pairs[i].second);
  }
  const Vec coef = a.colPivHouseholderQr().solve(b);
  rep.slope = coef[0];
  rep.intercept = coef[1];
  const Vec res = b - a * coef;
  rep.residuals.assign(res.data(), res.data() + n);
  const double mean = b.mean();
  const double ss_tot = (b.array() - mean).square().sum();
  rep.r_squared = ss_tot > 0.0 ? 1.0 - res.squaredNorm() / ss_tot : 1.0;
  return rep;
}

std::vector<double> dyadic_h(int kmin, int kmax) {
  if (kmin > kmax) throw std::invalid_argument("dyadic_h: empty exponent range");
  std::vector<double> out;
  for (int k = kmin; k <= kmax; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

ConvergenceReport free_convergence(const CutoffProfile& profile, FreeQuantity q, cplx mu,
                                   const std::vector<double>& h_values, const ScanConfig& config) {
  require_nonreal(mu);
  const FreeFiberScan scan(profile, config);
  std::vector<std::pair<double, double>> pairs;
  for (double h : h_values) pairs.emplace_back(h, scan.sup(q, h, mu).value);
  ConvergenceReport rep = fit_rate(pairs);
  rep.grid_config = config.to_json();
  return rep;
}

}  // namespace contlim
