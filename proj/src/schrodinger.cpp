#include "contlim/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace contlim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_integer_multiple(double value, double unit) {
  const double q = value / unit;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q) && std::round(q) >= 1.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// PotentialSpec

PotentialSpec PotentialSpec::make(const std::string& id, double M) {
  PotentialSpec p;
  p.id_ = id;
  p.M_ = M;
  if (id == "zero") {
    p.formula_ = Formula("0");
  } else if (id == "harmonic") {
    p.formula_ = Formula("x1^2+x2^2+x3^2");
  } else if (id.rfind("formula:", 0) == 0) {
    p.formula_ = Formula(id.substr(8));
  } else {
    throw std::invalid_argument("unknown potential " + id + " (expected zero, harmonic or formula:<expr>)");
  }
  return p;
}

double PotentialSpec::operator()(const Vec& x, double box_side) const {
  return formula_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), box_side);
}

void PotentialSpec::check(int dim, double box_side, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-0.5 * box_side, 0.5 * box_side);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 1.0;
  for (int s = 0; s < samples; ++s) {
    Vec x(dim), step(dim);
    for (int i = 0; i < dim; ++i) {
      x[i] = coord(rng);
      step[i] = normal(rng);
    }
    std::uniform_real_distribution<double> radius(0.0, 1.0);
    const Vec y = x + step.normalized() * radius(rng);
    const double vx = (*this)(x, box_side) + M_;
    const double vy = (*this)(y, box_side) + M_;
    if (!(vx >= 1.0) || !(vy >= 1.0)) {
      throw std::invalid_argument("potential " + id_ + " violates V + M >= 1 at a sample point");
    }
    worst = std::max({worst, vx / vy, vy / vx});
  }
  c1_ = worst;
}

nlohmann::json PotentialSpec::to_json() const { return {{"id", id_}, {"M", M_}, {"c1", c1_}}; }

// ---------------------------------------------------------------------------
// Torus

std::size_t LatticeTorus::size() const {
  std::size_t s = 1;
  for (int i = 0; i < lattice.dim(); ++i) s *= static_cast<std::size_t>(n);
  return s;
}

IVec LatticeTorus::coords(std::size_t site) const {
  IVec c(lattice.dim());
  for (int i = 0; i < lattice.dim(); ++i) {
    c[i] = static_cast<int>(site % n) - n / 2;
    site /= n;
  }
  return c;
}

Vec LatticeTorus::position(std::size_t site) const { return h * lattice.to_cartesian(coords(site)); }

std::size_t LatticeTorus::offset(std::size_t site, const IVec& step) const {
  std::size_t out = 0, stride = 1;
  for (int i = 0; i < lattice.dim(); ++i) {
    long c = static_cast<long>(site % n) + step[i];
    c %= n;
    if (c < 0) c += n;
    out += static_cast<std::size_t>(c) * stride;
    stride *= n;
    site /= n;
  }
  return out;
}

LatticeTorus make_lattice_torus(const LatticeSpec& lattice, double h, double side) {
  if (!(h > 0.0)) throw std::invalid_argument("lattice spacing h must be positive");
  if (!is_integer_multiple(side, h)) throw std::invalid_argument("box side must be a multiple of h");
  const long n = std::lround(side / h);
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("box needs an even number (>= 4) of sites per axis");
  return LatticeTorus{lattice, h, static_cast<int>(n)};
}

Eigen::VectorXd sample_potential(const LatticeTorus& torus, const PotentialSpec& V) {
  Eigen::VectorXd v(torus.size());
  for (std::size_t s = 0; s < torus.size(); ++s) {
    v[s] = V(torus.position(s), torus.side());
    if (!(v[s] + V.M() >= 1.0)) {
      throw std::invalid_argument("potential " + V.id() + " is below 1 - M on the sample (V + M >= 1 required)");
    }
  }
  return v;
}

SpMat assemble_Hh(const LatticeTorus& torus, const PotentialSpec& V) {
  const std::size_t n = torus.size();
  const Eigen::VectorXd v = sample_potential(torus, V);
  const double inv_h2 = 1.0 / (torus.h * torus.h);
  double diag = 0.0;
  for (const auto& e : torus.lattice.edges()) diag += 2.0 * e.weight * inv_h2;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(n * (1 + torus.lattice.degree()));
  for (std::size_t s = 0; s < n; ++s) {
    t.emplace_back(s, s, diag + v[s]);
    for (const auto& e : torus.lattice.edges()) {
      t.emplace_back(s, torus.offset(s, e.coords), -e.weight * inv_h2);
      t.emplace_back(s, torus.offset(s, IVec(-e.coords)), -e.weight * inv_h2);
    }
  }
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// ---------------------------------------------------------------------------
// Resolvent difference

nlohmann::json SchrodingerConfig::to_json() const {
  return {{"side", side},
          {"ref_factor", ref_factor},
          {"reference", "resolvent of H_h at spacing h/ref_factor on the same box"},
          {"power_iteration", power.to_json()}};
}

NormEstimate schrodinger_resolvent_difference(const CutoffProfile& profile, const PotentialSpec& V, cplx mu, double h,
                                              const SchrodingerConfig& config) {
  if (mu.imag() == 0.0) throw std::invalid_argument("mu must be non-real");
  const LatticeSpec& lattice = profile.lattice();
  const LatticeTorus coarse = make_lattice_torus(lattice, h, config.side);
  const LatticeTorus fine = make_lattice_torus(lattice, h / config.ref_factor, config.side);
  const ShiftedSolver rh(assemble_Hh(coarse, V), mu);
  const ShiftedSolver rref(assemble_Hh(fine, V), mu);
  const TorusEmbedding j(profile, h, coarse.n, config.ref_factor);
  const auto apply = [&](const CVec& v) { return CVec(j.apply(rh.solve(j.adjoint(v))) - rref.solve(v)); };
  const auto adjoint = [&](const CVec& v) {
    return CVec(j.apply(rh.solve_conj(j.adjoint(v))) - rref.solve_conj(v));
  };
  return power_norm(j.fine_size(), apply, adjoint, config.power);
}

nlohmann::json QualitativeReport::to_json() const {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : estimates) est.push_back(e.to_json());
  return {{"config", config},
          {"fit", fit.to_json()},
          {"power_iteration", est},
          {"strictly_decreasing", strictly_decreasing}};
}

QualitativeReport resolvent_convergence_qualitative(const CutoffProfile& profile, const PotentialSpec& V, cplx mu,
                                                    const std::vector<double>& h_values,
                                                    const SchrodingerConfig& config) {
  if (h_values.size() < 3) throw std::invalid_argument("convergence sweep needs at least 3 values of h");
  if (mu.imag() == 0.0) throw std::invalid_argument("mu must be non-real");
  QualitativeReport report;
  report.config = config.to_json();
  report.config["lattice"] = profile.lattice().name();
  report.config["potential"] = V.to_json();
  report.config["mu"] = {mu.real(), mu.imag()};
  report.config["h_values"] = h_values;
  std::vector<std::pair<double, double>> pairs;
  for (double h : h_values) {
    report.estimates.push_back(schrodinger_resolvent_difference(profile, V, mu, h, config));
    pairs.emplace_back(h, report.estimates.back().value);
  }
  report.fit = fit_rate(pairs);
  report.fit.grid_config = report.config;
  report.strictly_decreasing = true;
  for (std::size_t i = 1; i < report.fit.norms.size(); ++i)
    if (!(report.fit.norms[i] < report.fit.norms[i - 1])) report.strictly_decreasing = false;
  return report;
}

double commutator_norm(const CutoffProfile& profile, const PotentialSpec& V, double h,
                       const SchrodingerConfig& config) {
  const LatticeSpec& lattice = profile.lattice();
  const LatticeTorus coarse = make_lattice_torus(lattice, h, config.side);
  const LatticeTorus fine = make_lattice_torus(lattice, h / config.ref_factor, config.side);
  const TorusEmbedding j(profile, h, coarse.n, config.ref_factor);
  const Eigen::VectorXd g_coarse = (sample_potential(coarse, V).array() + V.M()).inverse().matrix();
  const Eigen::VectorXd g_fine = (sample_potential(fine, V).array() + V.M()).inverse().matrix();
  const int d = lattice.dim();

  struct Packet {
    Vec centre;
    double width;
    double frequency;
  };
  Vec origin = Vec::Zero(d), shifted = Vec::Zero(d);
  shifted[0] = 2.0;
  const std::vector<Packet> family{
      {origin, 1.0, 0.0}, {origin, 0.5, 0.0}, {shifted, 1.0, 0.0}, {shifted, 0.5, 0.0}, {origin, 1.0, 1.0}};
  double worst = 0.0;
  for (const auto& p : family) {
    CVec f(fine.size());
    for (std::size_t s = 0; s < fine.size(); ++s) {
      const Vec x = fine.position(s);
      f[s] = std::exp(-(x - p.centre).squaredNorm() / (p.width * p.width)) * std::polar(1.0, kTwoPi * p.frequency * x[0]);
    }
    const CVec lhs = g_coarse.cast<cplx>().cwiseProduct(j.adjoint(f));
    const CVec rhs = j.adjoint(CVec(g_fine.cast<cplx>().cwiseProduct(f)));
    worst = std::max(worst, j.coarse_norm(lhs - rhs) / j.fine_norm(f));
  }
  return worst;
}

RelativeBound schrodinger_relative_bound(const LatticeTorus& torus, const PotentialSpec& V, const PowerConfig& power) {
  RelativeBound out;
  out.h = torus.h;
  out.a = relative_bound(assemble_Hh(torus, V), sample_potential(torus, V), V.M(), power).value;
  out.b = out.a * V.M();
  return out;
}

// ---------------------------------------------------------------------------
// Spectra

nlohmann::json SpectrumComparison::to_json() const {
  return {{"h", h},
          {"coarse", coarse},
          {"reference", reference},
          {"hausdorff_distance", distance},
          {"core_mass", core_mass},
          {"boundary_potential", boundary_potential}};
}

double hausdorff_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Hausdorff distance of empty sets");
  const auto directed = [](const std::vector<double>& x, const std::vector<double>& y) {
    double out = 0.0;
    for (double u : x) {
      double best = std::numeric_limits<double>::infinity();
      for (double v : y) best = std::min(best, std::abs(u - v));
      out = std::max(out, best);
    }
    return out;
  };
  return std::max(directed(a, b), directed(b, a));
}

namespace {

struct TorusSpectrum {
  std::vector<double> values;
  double core_mass = 1.0;
  double boundary_potential = std::numeric_limits<double>::infinity();
};

TorusSpectrum torus_spectrum(const LatticeTorus& torus, const PotentialSpec& V, int k) {
  const Eigen::VectorXd v = sample_potential(torus, V);
  const SpMat m = assemble_Hh(torus, V);
  const Eigenpairs pairs = lowest_eigenpairs(m, k, v.minCoeff() - 1.0);
  TorusSpectrum out;
  out.values.assign(pairs.values.data(), pairs.values.data() + pairs.values.size());
  const double core = 0.5 * kCoreFraction * torus.n;
  std::vector<bool> in_core(torus.size());
  for (std::size_t s = 0; s < torus.size(); ++s) {
    const IVec c = torus.coords(s);
    in_core[s] = c.cwiseAbs().maxCoeff() < core;
    if (c.minCoeff() == -torus.n / 2) out.boundary_potential = std::min(out.boundary_potential, v[s]);
  }
  for (int i = 0; i < k; ++i) {
    double mass = 0.0;
    for (std::size_t s = 0; s < torus.size(); ++s)
      if (in_core[s]) mass += pairs.vectors(static_cast<Eigen::Index>(s), i) * pairs.vectors(static_cast<Eigen::Index>(s), i);
    out.core_mass = std::min(out.core_mass, mass);
  }
  return out;
}

}  // namespace

SpectrumComparison spectra_hausdorff(const LatticeSpec& lattice, const PotentialSpec& V, double h, int k,
                                     const SchrodingerConfig& config) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (config.ref_factor < 2) throw std::invalid_argument("ref_factor must be at least 2");
  const LatticeTorus coarse = make_lattice_torus(lattice, h, config.side);
  const LatticeTorus fine = make_lattice_torus(lattice, h / config.ref_factor, config.side);
  if (static_cast<std::size_t>(k) > coarse.size() / 4) throw std::domain_error("k too large for the torus");
  const TorusSpectrum a = torus_spectrum(coarse, V, k);
  const TorusSpectrum b = torus_spectrum(fine, V, k);
  SpectrumComparison out;
  out.h = h;
  out.coarse = a.values;
  out.reference = b.values;
  out.distance = hausdorff_distance(a.values, b.values);
  out.core_mass = std::min(a.core_mass, b.core_mass);
  out.boundary_potential = std::min(a.boundary_potential, b.boundary_potential);
  if (out.core_mass < kMinCoreMass) {
    throw std::domain_error("k too large for reliable truncation: an eigenvector has core mass " +
                            std::to_string(out.core_mass) + " < 0.99");
  }
  const double top = std::max(a.values.back(), b.values.back());
  if (!(top < out.boundary_potential)) {
    throw std::domain_error("k too large for reliable truncation: eigenvalue " + std::to_string(top) +
                            " is not below the potential on the box boundary (" +
                            std::to_string(out.boundary_potential) + ")");
  }
  return out;
}

}  // namespace contlim
