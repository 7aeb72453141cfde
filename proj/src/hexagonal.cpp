#include "contlim/hexagonal.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace contlim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

int mod3(int n) { return ((n % 3) + 3) % 3; }

}  // namespace

HexGeometry make_hex_geometry(double h) {
  if (!(h > 0.0)) throw std::invalid_argument("hexagonal lattice requires h > 0");
  const double s3 = std::sqrt(3.0);
  HexGeometry g;
  g.h = h;
  g.e = {vec2(0.5, s3 / 2.0), vec2(0.5, -s3 / 2.0), vec2(-1.0, 0.0)};
  g.f = {g.e[0] - g.e[2], g.e[1] - g.e[2]};
  Mat f(2, 2);
  f << g.f[0], g.f[1];
  const Mat fd = f.inverse().transpose();
  g.fp = {fd.col(0), fd.col(1)};
  Mat e(2, 2);
  e << g.e[0], g.e[1];
  const Mat ed = e.inverse().transpose();
  g.ep = {ed.col(0), ed.col(1)};
  g.omega0 = s3 / 2.0;
  return g;
}

Mat HexGeometry::gamma_dual() const {
  Mat out(2, 2);
  out << fp[0], fp[1];
  return out;
}

LatticeSpec HexGeometry::triangular() const {
  Mat l(2, 2);
  l << e[0], e[1];
  EdgeGenerator a, b, c;
  a.coords = IVec::Unit(2, 0);
  b.coords = IVec::Unit(2, 1);
  c.coords = -IVec::Ones(2);  // e3 = -e1 - e2
  return LatticeSpec("hex_triangular", l, {a, b, c});
}

cplx hex_phase(const HexGeometry& g, const Vec& f, const Vec& xi) {
  return std::polar(1.0, kTwoPi * g.h * f.dot(xi));
}

cplx weighted_inner(const CVec& u, const CVec& v) {
  if (u.size() != v.size() || u.size() == 0) throw std::invalid_argument("weighted_inner: size mismatch");
  return u.dot(v) / static_cast<double>(u.size());
}

CMat weighted_adjoint(const CMat& a) {
  return (static_cast<double>(a.cols()) / static_cast<double>(a.rows())) * a.adjoint();
}

double weighted_norm(const CMat& a) {
  return std::sqrt(static_cast<double>(a.cols()) / static_cast<double>(a.rows())) * spectral_norm(a);
}

cplx hex_alpha(const HexGeometry& g, const Vec& xi) {
  return 1.0 + hex_phase(g, g.f[0], xi) + hex_phase(g, g.f[1], xi);
}

HexFiber hex_fiber(const HexGeometry& g, const Vec& xi) {
  if (xi.size() != 2) throw std::invalid_argument("hex_fiber: xi must be 2-dimensional");
  const double s = 1.0 / (g.h * g.h);
  auto ph = [&](const Vec& f) { return hex_phase(g, f, xi); };
  const Vec& f1 = g.f[0];
  const Vec& f2 = g.f[1];
  HexFiber out;
  out.xi = xi;
  out.Htr.resize(3, 3);
  out.Htr << 6.0, -1.0 - ph(f1) - ph(f2), -1.0 - ph(f2) - ph(f2 - f1),
             -1.0 - ph(-f1) - ph(-f2), 6.0, -1.0 - ph(-f1) - ph(f2 - f1),
             -1.0 - ph(-f2) - ph(f1 - f2), -1.0 - ph(f1) - ph(f1 - f2), 6.0;
  out.Htr *= s;
  out.Hhex.resize(2, 2);
  out.Hhex << 3.0, -1.0 - ph(f1) - ph(f2),
              -1.0 - ph(-f1) - ph(-f2), 3.0;
  out.Hhex *= s;
  out.Theta.resize(3, 2);
  out.Theta << 1.0, 0.0,
               0.0, 1.0,
               (1.0 + ph(-f2) + ph(f1 - f2)) / 6.0, (1.0 + ph(f1) + ph(f1 - f2)) / 6.0;
  out.ThetaStar = weighted_adjoint(out.Theta);
  return out;
}

HexEigenpairs hex_eigenpairs(const HexGeometry& g, const Vec& xi) {
  const cplx a = hex_alpha(g, xi);
  const double m = std::abs(a);
  if (m < 1e-12) {
    throw std::domain_error("hex_eigenpairs: Dirac point (|alpha| < 1e-12), eigenvectors undefined");
  }
  const double s = 1.0 / (g.h * g.h);
  HexEigenpairs out;
  out.E_minus = s * (3.0 - m);
  out.E_plus = s * (3.0 + m);
  out.w_minus.resize(2);
  out.w_plus.resize(2);
  out.w_minus << 1.0, std::conj(a) / m;
  out.w_plus << 1.0, -std::conj(a) / m;
  return out;
}

std::pair<double, double> hex_bands(const HexGeometry& g, const Vec& xi) {
  const double m = std::abs(hex_alpha(g, xi));
  const double s = 1.0 / (g.h * g.h);
  return {s * (3.0 - m), s * (3.0 + m)};
}

double tr_dispersion(const HexGeometry& g, const Vec& xi) {
  double c = 0.0;
  for (const auto& e : g.e) c += std::cos(kTwoPi * g.h * e.dot(xi));
  return (6.0 - 2.0 * c) / (g.h * g.h);
}

TrEigenpairs tr_eigenpairs(const HexGeometry& g, const Vec& xi) {
  TrEigenpairs out;
  const Vec shift = g.fp[0] / g.h;
  const std::array<Vec, 3> at = {xi, Vec(xi + shift), Vec(xi - shift)};
  for (int i = 0; i < 3; ++i) {
    out.E[i] = tr_dispersion(g, at[i]);
    CVec w(3);
    w << 1.0, hex_phase(g, g.e[2], at[i]), hex_phase(g, -g.e[1], at[i]);
    out.w[i] = w;
  }
  return out;
}

SupResult tr_band_floor(const ScanConfig& config) {
  // no refinement: E^tr_+ and E^tr_- swap roles with the neighbouring
  // zones, so the minimum is only meaningful on Omega itself
  const HexGeometry g = make_hex_geometry(1.0);
  const BrillouinZone zone = brillouin_zone(DualLattice{g.gamma_dual()}, config.points_per_axis);
  SupResult out;
  out.value = std::numeric_limits<double>::infinity();
  for (const Vec& xi : zone.points) {
    const TrEigenpairs t = tr_eigenpairs(g, xi);
    const double v = std::min(t.E[1], t.E[2]);
    if (v < out.value) {
      out.value = v;
      out.argmax = xi;
    }
  }
  return out;
}

HexField make_hex_field(int n1, int n2, int components) {
  if (n1 < 1 || n2 < 1 || components < 1) throw std::invalid_argument("hex field needs positive dimensions");
  HexField f;
  f.n1 = n1;
  f.n2 = n2;
  f.components = components;
  f.values = CVec::Zero(static_cast<Eigen::Index>(n1) * n2 * components);
  return f;
}

cplx& HexField::at(int c, int i, int j) {
  i = ((i % n1) + n1) % n1;
  j = ((j % n2) + n2) % n2;
  return values[i + n1 * (j + n2 * c)];
}

cplx HexField::at(int c, int i, int j) const {
  i = ((i % n1) + n1) % n1;
  j = ((j % n2) + n2) % n2;
  return values[i + n1 * (j + n2 * c)];
}

HexField theta_apply(const HexGeometry&, const HexField& u) {
  if (u.components != 2) throw std::invalid_argument("theta_apply expects a two-component field");
  if (u.n1 < 3 || u.n2 < 3) throw std::invalid_argument("theta_apply: patch too small for the six-neighbour stencil");
  HexField out = make_hex_field(u.n1, u.n2, 3);
  for (int j = 0; j < u.n2; ++j) {
    for (int i = 0; i < u.n1; ++i) {
      out.at(0, i, j) = u.at(0, i, j);
      out.at(1, i, j) = u.at(1, i, j);
      // neighbours of z - h e2, as (component, shift in f1, shift in f2)
      out.at(2, i, j) = (u.at(0, i, j) + u.at(0, i + 1, j - 1) + u.at(0, i, j - 1) + u.at(1, i, j) +
                         u.at(1, i + 1, j) + u.at(1, i + 1, j - 1)) /
                        6.0;
    }
  }
  return out;
}

HexField hex_apply(const HexGeometry& g, const HexField& u) {
  if (u.components != 2) throw std::invalid_argument("hex_apply expects a two-component field");
  if (u.n1 < 3 || u.n2 < 3) throw std::invalid_argument("hex_apply: patch too small for the stencil");
  const double s = 1.0 / (g.h * g.h);
  HexField out = make_hex_field(u.n1, u.n2, 2);
  for (int j = 0; j < u.n2; ++j) {
    for (int i = 0; i < u.n1; ++i) {
      // z + h e_j from Lambda^+: B sites at y, y + f1, y + f2
      out.at(0, i, j) = s * (3.0 * u.at(0, i, j) - u.at(1, i, j) - u.at(1, i + 1, j) - u.at(1, i, j + 1));
      // z - h e_j from Lambda^-: A sites at y, y - f1, y - f2
      out.at(1, i, j) = s * (3.0 * u.at(1, i, j) - u.at(0, i, j) - u.at(0, i - 1, j) - u.at(0, i, j - 1));
    }
  }
  return out;
}

double hex_projector_defect(const HexGeometry& g, cplx mu, const Vec& xi) {
  const HexFiber fb = hex_fiber(g, xi);
  const CMat rtr = (0.5 * fb.Htr - mu * CMat::Identity(3, 3)).inverse();
  const CMat defect = (CMat::Identity(3, 3) - fb.Theta * fb.ThetaStar) * rtr;
  return weighted_norm(defect);
}

double hex_intertwining(const HexGeometry& g, cplx mu, const Vec& xi) {
  const HexFiber fb = hex_fiber(g, xi);
  const CMat rtr = (0.5 * fb.Htr - mu * CMat::Identity(3, 3)).inverse();
  const CMat rhex = (fb.Hhex - mu * CMat::Identity(2, 2)).inverse();
  return weighted_norm(fb.ThetaStar * rtr - rhex * fb.ThetaStar);
}

double hex_combined(const HexGeometry& g, const CutoffProfile& profile, cplx mu, const Vec& xi) {
  const double s = 1.0 / (g.h * g.h);
  const HexFiber fb = hex_fiber(g, xi);
  const CMat rhex = (fb.Hhex - mu * CMat::Identity(2, 2)).inverse();
  const CMat k = fb.Theta * rhex * fb.ThetaStar;
  const TrEigenpairs tr = tr_eigenpairs(g, xi);
  CMat w(3, 3);
  for (int c = 0; c < 3; ++c) w.col(c) = tr.w[c];
  // (w0, w+, w-) is orthonormal for the weighted product, so the coefficient
  // map onto Euclidean C^3 is (1/3) W^H
  const CMat b = w.adjoint() * k * w / 3.0;

  const Vec kk = g.h * xi;
  const Mat gd = g.gamma_dual();
  const double sqrt_omega0 = std::sqrt(profile.cell_volume());
  std::vector<int> cls;
  std::vector<double> amp;
  std::vector<cplx> diag;
  double tail = 0.0;
  constexpr int kRadius = 4;
  const double c0 = 0.75 * kTwoPi * kTwoPi;
  for (int m2 = -kRadius; m2 <= kRadius; ++m2) {
    for (int m1 = -kRadius; m1 <= kRadius; ++m1) {
      const Vec q = kk + gd.col(0) * m1 + gd.col(1) * m2;
      const cplx d = 1.0 / (s * c0 * q.squaredNorm() - mu);
      const double a = profile.phi_hat(q) / sqrt_omega0;
      if (a == 0.0) {
        tail = std::max(tail, std::abs(d));
        continue;
      }
      cls.push_back(mod3(m1 + m2));
      amp.push_back(a);
      diag.push_back(d);
    }
  }
  const std::size_t n = cls.size();
  CMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = amp[i] * amp[j] * b(cls[i], cls[j]);
    m(i, i) -= diag[i];
  }
  return std::max(spectral_norm(m), tail);
}

nlohmann::json HexChainReport::to_json() const {
  return {{"projector_defect", projector_defect.to_json()},
          {"intertwining", intertwining.to_json()},
          {"combined", combined.to_json()}};
}

HexChainReport hex_convergence_chain(const CutoffProfile& profile, cplx mu, const std::vector<double>& h_values,
                                     const ScanConfig& config) {
  if (mu.imag() == 0.0) throw std::invalid_argument("spectral parameter mu must be non-real");
  const HexGeometry unit = make_hex_geometry(1.0);
  const BrillouinZone zone = brillouin_zone(DualLattice{unit.gamma_dual()}, config.points_per_axis);
  std::vector<std::pair<double, double>> pa, pb, pc;
  for (double h : h_values) {
    const HexGeometry g = make_hex_geometry(h);
    const double scale = 1.0 / h;
    pa.emplace_back(h, sup_over_zone([&](const Vec& xi) { return hex_projector_defect(g, mu, xi); }, zone, config,
                                     scale).value);
    pb.emplace_back(h, sup_over_zone([&](const Vec& xi) { return hex_intertwining(g, mu, xi); }, zone, config,
                                     scale).value);
    pc.emplace_back(h, sup_over_zone([&](const Vec& xi) { return hex_combined(g, profile, mu, xi); }, zone, config,
                                     scale).value);
  }
  HexChainReport out;
  out.projector_defect = fit_rate(pa);
  out.intertwining = fit_rate(pb);
  out.combined = fit_rate(pc);
  for (auto* r : {&out.projector_defect, &out.intertwining, &out.combined}) r->grid_config = config.to_json();
  return out;
}

}  // namespace contlim
