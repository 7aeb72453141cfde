#include "contlim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "contlim/convergence.hpp"
#include "contlim/elliptic.hpp"
#include "contlim/embedding.hpp"
#include "contlim/hexagonal.hpp"
#include "contlim/parallel.hpp"
#include "contlim/schrodinger.hpp"
#include "contlim/symbols.hpp"

namespace contlim {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Assertion at_least(std::string name, double value, double bound) {
  return {std::move(name), value, ">=", bound, 0.0, value >= bound};
}

Assertion at_most(std::string name, double value, double bound) {
  return {std::move(name), value, "<=", bound, 0.0, value <= bound};
}

Assertion within(std::string name, double value, double lo, double hi) {
  return {std::move(name), value, "in", lo, hi, value >= lo && value <= hi};
}

std::vector<std::string> expand_lattices(const std::vector<std::string>& names, const std::string& fallback) {
  std::vector<std::string> out;
  if (names.empty()) out.push_back(fallback);
  for (const auto& n : names) {
    if (n == "all") {
      for (const auto& p : preset_names()) out.push_back(p);
    } else {
      out.push_back(n);
    }
  }
  return out;
}

CutoffProfile profile_for(const LatticeSpec& lattice, int grid_res) {
  if (grid_res == 0) return CutoffProfile::build(lattice);
  return CutoffProfile::build(lattice, default_epsilon(lattice), grid_res);
}

ScanConfig scan_config(const RunConfig& c) {
  ScanConfig s;
  s.points_per_axis = c.points;
  s.refine_rounds = c.refine;
  s.subdivision = c.subdivision;
  if (s.points_per_axis < 2) throw ConfigError("--points must be at least 2");
  if (s.refine_rounds < 0) throw ConfigError("--refine must be non-negative");
  if (s.subdivision < 1) throw ConfigError("--subdivision must be positive");
  return s;
}

FreeQuantity parse_quantity(const std::string& q) {
  if (q == "resolvent_difference" || q == "resolvent") return FreeQuantity::resolvent_difference;
  if (q == "one_minus_JJ" || q == "one-minus-jj") return FreeQuantity::one_minus_JJ;
  if (q == "adjoint_difference" || q == "adjoint") return FreeQuantity::adjoint_difference;
  throw ConfigError("unknown quantity " + q);
}

// Explicit --h values win over a sweep; both need `min_points` values.
std::vector<double> h_list_or(const RunConfig& c, const std::vector<double>& fallback, std::size_t min_points) {
  if (c.h_values.empty() && !c.sweep) return fallback;
  if (c.h_values.empty()) return c.sweep->values(min_points);
  std::vector<double> hs = c.h_values;
  for (double h : hs)
    if (!(h > 0.0)) throw ConfigError("h values must be positive");
  std::sort(hs.begin(), hs.end(), std::greater<>());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
  if (hs.size() < min_points)
    throw ConfigError("need at least " + std::to_string(min_points) + " distinct h values, got " +
                      std::to_string(hs.size()));
  return hs;
}

std::vector<double> h_list(const RunConfig& c, Sweep fallback, std::size_t min_points) {
  if (c.h_values.empty() && !c.sweep) return fallback.values(min_points);
  return h_list_or(c, {}, min_points);
}

std::vector<double> sweep_values(const RunConfig& c, Sweep fallback) { return h_list(c, fallback, 3); }

Sweep dyadic_sweep(int kmin, int kmax) { return Sweep{std::ldexp(1.0, -kmin), std::ldexp(1.0, -kmax), 2.0}; }

CoefficientField single_coeffs(const RunConfig& c) {
  if (c.coeffs.size() != 1) throw ConfigError("this command takes exactly one --coeffs file");
  return CoefficientField::load(c.coeffs.front());
}

std::string csv_header(const RunConfig& c) {
  return std::string("# contlim ") + kVersion + " " + c.command + "\n# config " + c.to_json().dump() + "\n";
}

// ---------------------------------------------------------------------------

Vec parse_xi(const std::vector<double>& xi, int dim) {
  if (static_cast<int>(xi.size()) != dim)
    throw ConfigError("--xi needs " + std::to_string(dim) + " components");
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out[i] = xi[i];
  return out;
}

// Points of the axis grid on [-1, 1]^d inside the closed unit ball, 0 excluded.
std::vector<Vec> unit_ball_grid(int dim, int per_axis) {
  std::vector<Vec> out;
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(per_axis);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t cc = code;
    Vec xi(dim);
    for (int i = 0; i < dim; ++i) {
      xi[i] = -1.0 + 2.0 * static_cast<double>(cc % per_axis) / (per_axis - 1);
      cc /= per_axis;
    }
    const double r = xi.norm();
    if (r > 0.0 && r <= 1.0 + 1e-12) out.push_back(xi);
  }
  return out;
}

void cmd_symbol(const RunConfig& c, RunResult& r) {
  r.report["mode"] = c.symbol_mode;
  if (c.symbol_mode == "eval") {
    const std::string kind = c.symbol_kind.empty() ? "p0h" : c.symbol_kind;
    if (kind != "p0" && kind != "p0h") throw ConfigError("symbol eval --kind must be p0 or p0h");
    const auto lats = expand_lattices(c.lattices, "square1");
    if (lats.size() != 1) throw ConfigError("symbol eval takes one lattice");
    const LatticeSpec lat = resolve_lattice(lats.front());
    const Vec xi = parse_xi(c.xi, lat.dim());
    nlohmann::json rows = nlohmann::json::array();
    const std::vector<double> hs = kind == "p0" ? std::vector<double>{0.0} : h_list_or(c, {1.0}, 1);
    for (double h : hs) {
      const double v = kind == "p0" ? eval_p0(lat, xi) : eval_p0h(lat, h, xi);
      nlohmann::json row = {{"value", v}, {"argmax_xi", c.xi}, {"grid_config", nullptr}};
      if (kind == "p0h") row["h"] = h;
      rows.push_back(row);
    }
    r.report["results"] = {{"lattice", lat.name()}, {"kind", kind}, {"rows", rows}};
    return;
  }
  if (c.symbol_mode != "sup") throw ConfigError("symbol mode must be eval or sup");
  const std::string kind = c.symbol_kind.empty() ? "p0h" : c.symbol_kind;

  if (kind == "difference") {
    if (c.dim < 1 || c.dim > 3) throw ConfigError("--dim must be 1, 2 or 3");
    const auto hs = h_list(c, dyadic_sweep(1, 8), 3);
    const int grid = 2 * c.points + 1;
    nlohmann::json rows = nlohmann::json::array();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double h : hs) {
      const SymbolRatio s = difference_symbol_ratio(c.dim, h, grid);
      rows.push_back({{"h", h},
                      {"value", s.value},
                      {"argmax_xi", std::vector<double>(s.argmax.begin(), s.argmax.end())},
                      {"grid_config", {{"points_per_axis", grid}, {"domain", "|xi| <= 1"}}}});
      lo = std::min(lo, s.value);
      hi = std::max(hi, s.value);
    }
    r.report["results"] = {{"kind", kind}, {"dim", c.dim}, {"rows", rows}};
    r.assertions.push_back(at_least("difference ratio minimum over h", lo, 0.0));
    r.assertions.push_back(at_most("difference ratio variation over h (max/min)", hi / lo, 1.5));
    return;
  }

  if (kind != "p0h" && kind != "taylor") throw ConfigError("symbol sup --kind must be p0h, taylor or difference");
  const ScanConfig scan = scan_config(c);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& name : expand_lattices(c.lattices, "square1")) {
    const LatticeSpec lat = resolve_lattice(name);
    nlohmann::json rows = nlohmann::json::array();
    if (kind == "p0h") {
      const BrillouinZone zone = brillouin_zone(dual(lat), scan.points_per_axis);
      for (double h : h_list_or(c, {1.0}, 1)) {
        const SupResult s = sup_over_zone([&](const Vec& xi) { return eval_p0h(lat, h, xi); }, zone, scan, 1.0 / h);
        nlohmann::json row = s.to_json();
        row["h"] = h;
        row["upper_bound"] = p0h_upper_bound(lat, h);
        rows.push_back(row);
        r.assertions.push_back(at_most(name + ": sup p0h at h=" + fmt(h) + " vs 4 h^-2 sum mu", s.value,
                                       p0h_upper_bound(lat, h) * (1.0 + 1e-14)));
      }
      out.push_back({{"lattice", name}, {"rows", rows}});
      continue;
    }
    // |2(1 - cos t) - t^2| <= t^4 / 12 with t = 2 pi h f.xi
    double bound = 0.0;
    for (int j = 0; j < lat.edge_count(); ++j)
      bound += lat.edges()[j].weight * std::pow(2.0 * std::numbers::pi * lat.edge_vector(j).norm(), 4);
    bound /= 12.0;
    const int grid = 2 * c.points + 1;
    const std::vector<Vec> ball = unit_ball_grid(lat.dim(), grid);
    std::vector<std::pair<double, double>> pairs;
    double worst_ratio = 0.0;
    for (double h : h_list(c, dyadic_sweep(1, 8), 3)) {
      double diff = 0.0, ratio = 0.0;
      Vec arg = ball.front();
      for (const Vec& xi : ball) {
        const double d = std::abs(eval_p0h(lat, h, xi) - eval_p0(lat, xi));
        if (d > diff) {
          diff = d;
          arg = xi;
        }
        ratio = std::max(ratio, d / (h * h * std::pow(xi.squaredNorm(), 2)));
      }
      worst_ratio = std::max(worst_ratio, ratio);
      pairs.emplace_back(h, diff);
      rows.push_back({{"h", h},
                      {"value", diff},
                      {"argmax_xi", std::vector<double>(arg.begin(), arg.end())},
                      {"ratio", ratio},
                      {"grid_config", {{"points_per_axis", grid}, {"domain", "|xi| <= 1"}}}});
    }
    const ConvergenceReport fit = fit_rate(pairs);
    out.push_back({{"lattice", name}, {"rows", rows}, {"slope", fit.slope}, {"ratio_bound", bound}});
    r.assertions.push_back(at_least(name + ": slope of max |p0h - p0| over |xi| <= 1", fit.slope, 1.95));
    // the bound is sharp as xi -> 0; allow for rounding in the difference
    r.assertions.push_back(at_most(name + ": max |p0h - p0| / (h^2 |xi|^4)", worst_ratio, bound * (1.0 + 1e-6)));
  }
  r.report["results"] = {{"kind", kind}, {"lattices", out}};
}

void cmd_embed_check(const RunConfig& c, RunResult& r) {
  if (c.samples < 1) throw ConfigError("--samples must be positive");
  nlohmann::json out = nlohmann::json::array();
  for (const auto& name : expand_lattices(c.lattices, "square1")) {
    const LatticeSpec lat = resolve_lattice(name);
    const CutoffProfile profile = profile_for(lat, c.grid_res);
    const int d = lat.dim();
    const double omega0 = lat.cell_volume();
    const auto shell = integer_shell(d, kDualShellRadius);

    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    double orth = 0.0;
    for (int s = 0; s < c.samples; ++s) {
      Vec t(d);
      for (int i = 0; i < d; ++i) t[i] = unit(rng);
      const Vec xi = profile.dual().generator * t;
      double sum = std::pow(profile.phi_hat(xi), 2);
      for (const auto& n : shell) sum += std::pow(profile.phi_hat(xi + profile.dual().point(n)), 2);
      orth = std::max(orth, std::abs(sum - omega0));
    }

    // Gram matrix of the translates phi(x - y), y in a 5-block, by quadrature
    // on a periodic box
    const int cells = d <= 2 ? 16 : 8;
    const TorusEmbedding j(profile, 1.0, cells, kMinSamplesPerCell);
    std::vector<std::size_t> block;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= 5;
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t cc = code, idx = 0, stride = 1;
      for (int i = 0; i < d; ++i) {
        const int y = static_cast<int>(cc % 5) - 2;
        cc /= 5;
        idx += static_cast<std::size_t>((y + cells) % cells) * stride;
        stride *= cells;
      }
      block.push_back(idx);
    }
    std::vector<CVec> images;
    for (std::size_t idx : block) {
      CVec e = CVec::Zero(j.coarse_size());
      e[idx] = 1.0;
      images.push_back(j.apply(e));
    }
    double gram = 0.0;
    for (std::size_t a = 0; a < images.size(); ++a) {
      for (std::size_t b = a; b < images.size(); ++b) {
        const cplx g = images[a].dot(images[b]) * j.fine_weight() / j.coarse_weight();
        gram = std::max(gram, std::abs(g - (a == b ? 1.0 : 0.0)));
      }
    }
    out.push_back({{"lattice", name},
                   {"profile", {{"eps", profile.eps()}, {"grid_res", profile.grid_res()}, {"r0", profile.r0()},
                                {"band_count", profile.band_set().size()}, {"mollifier", kMollifierName}}},
                   {"orthonormality_max_error", orth},
                   {"gram_max_error", gram},
                   {"gram_box_cells", cells}});
    r.assertions.push_back(at_most(name + ": max |sum |phi-hat(xi+eta)|^2 - omega0|", orth, 1e-10));
    r.assertions.push_back(at_most(name + ": 5-block Gram matrix deviation from identity", gram, 1e-6));
  }
  r.report["results"] = out;
}

void cmd_converge_free(const RunConfig& c, RunResult& r) {
  const auto hs = sweep_values(c, dyadic_sweep(2, 8));
  const ScanConfig scan = scan_config(c);
  const FreeQuantity q = parse_quantity(c.quantity);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& name : expand_lattices(c.lattices, "square1")) {
    const LatticeSpec lat = resolve_lattice(name);
    const auto start = std::chrono::steady_clock::now();
    const CutoffProfile profile = profile_for(lat, c.grid_res);
    const ConvergenceReport rep = free_convergence(profile, q, c.mu, hs, scan);
    r.timings.emplace_back(name, seconds_since(start));
    nlohmann::json entry = rep.to_json();
    entry["lattice"] = name;
    entry["mu"] = {c.mu.real(), c.mu.imag()};
    entry["quantity"] = c.quantity;
    out.push_back(entry);
    r.assertions.push_back(within(name + ": slope", rep.slope, c.min_slope.value_or(1.9), c.max_slope.value_or(2.1)));
    r.assertions.push_back(at_least(name + ": r_squared", rep.r_squared, c.min_r2.value_or(0.99)));
  }
  r.report["results"] = out;
}

void cmd_converge_hex(const RunConfig& c, RunResult& r) {
  const auto hs = sweep_values(c, dyadic_sweep(2, 8));
  const ScanConfig scan = scan_config(c);
  const CutoffProfile profile = profile_for(make_preset("triangular"), c.grid_res);
  const HexChainReport rep = hex_convergence_chain(profile, c.mu, hs, scan);
  r.report["results"] = rep.to_json();
  const SupResult tr_floor = tr_band_floor(scan);
  r.report["results"]["tr_band_floor"] = {{"value", tr_floor.value},
                                          {"argmin_xi", std::vector<double>(tr_floor.argmax.begin(), tr_floor.argmax.end())},
                                          {"grid_config", scan.to_json()}};
  r.assertions.push_back(at_least("h^2 E^tr_+- floor", tr_floor.value, std::numeric_limits<double>::min()));
  const double floor = c.min_slope.value_or(1.9);
  r.assertions.push_back(at_least("projector defect slope", rep.projector_defect.slope, floor));
  r.assertions.push_back(at_least("intertwining slope", rep.intertwining.slope, floor));
  r.assertions.push_back(at_least("combined difference slope", rep.combined.slope, floor));
}

void cmd_hex_bands(const RunConfig& c, RunResult& r) {
  if (c.points < 1) throw ConfigError("--points must be positive");
  const HexGeometry g = make_hex_geometry(1.0);
  // Gamma -> K -> M -> Gamma in Gamma'_1
  const Vec gamma = Vec::Zero(2);
  const Vec kpt = g.fp[0] / 3.0 + 2.0 * g.fp[1] / 3.0;
  const Vec mpt = g.fp[0] / 2.0;
  const std::vector<Vec> corners{gamma, kpt, mpt, gamma};
  std::ostringstream csv;
  csv << csv_header(c) << "t,xi1,xi2,E_minus,E_plus\n";
  double e_minus0 = 0.0, e_plus0 = 0.0;
  for (std::size_t seg = 0; seg + 1 < corners.size(); ++seg) {
    const int last = seg + 2 == corners.size() ? c.points : c.points - 1;
    for (int i = 0; i <= last; ++i) {
      const double t = static_cast<double>(i) / c.points;
      const Vec xi = (1.0 - t) * corners[seg] + t * corners[seg + 1];
      const auto [em, ep] = hex_bands(g, xi);
      if (seg == 0 && i == 0) {
        e_minus0 = em;
        e_plus0 = ep;
      }
      csv << fmt(static_cast<double>(seg) + t) << ',' << fmt(xi[0]) << ',' << fmt(xi[1]) << ',' << fmt(em) << ','
          << fmt(ep) << '\n';
    }
  }

  // closed forms against a dense eigensolver at random quasimomenta
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  double value_err = 0.0, vector_err = 0.0, tr_err = 0.0;
  int checked = 0;
  for (int s = 0; s < c.samples; ++s) {
    const Vec xi = unit(rng) * g.fp[0] + unit(rng) * g.fp[1];
    if (std::abs(hex_alpha(g, xi)) < 1e-6) continue;
    ++checked;
    const HexFiber f = hex_fiber(g, xi);
    const HexEigenpairs ep = hex_eigenpairs(g, xi);
    Eigen::SelfAdjointEigenSolver<CMat> es(f.Hhex, Eigen::EigenvaluesOnly);
    value_err = std::max({value_err, std::abs(es.eigenvalues()[0] - ep.E_minus),
                          std::abs(es.eigenvalues()[1] - ep.E_plus)});
    vector_err = std::max({vector_err, (f.Hhex * ep.w_minus - ep.E_minus * ep.w_minus).norm() / ep.w_minus.norm(),
                           (f.Hhex * ep.w_plus - ep.E_plus * ep.w_plus).norm() / ep.w_plus.norm()});
    const TrEigenpairs tr = tr_eigenpairs(g, xi);
    for (int i = 0; i < 3; ++i) tr_err = std::max(tr_err, (f.Htr * tr.w[i] - tr.E[i] * tr.w[i]).norm() / tr.w[i].norm());
  }
  r.text = csv.str();
  r.report["results"] = {{"E_minus_at_0", e_minus0},
                         {"E_plus_at_0", e_plus0},
                         {"checked_samples", checked},
                         {"eigenvalue_max_error", value_err},
                         {"eigenvector_max_residual", vector_err},
                         {"triangular_eigenvector_max_residual", tr_err}};
  r.assertions.push_back(within("E_minus(0)", e_minus0, 0.0, 0.0));
  r.assertions.push_back(within("E_plus(0)", e_plus0, 6.0, 6.0));
  r.assertions.push_back(at_most("closed-form vs dense eigenvalues", value_err, 1e-12));
  r.assertions.push_back(at_most("closed-form eigenvector residual", vector_err, 1e-12));
  r.assertions.push_back(at_most("triangular eigenvector residual", tr_err, 1e-12));
}

void cmd_converge_elliptic(const RunConfig& c, RunResult& r) {
  const CoefficientField coeffs = single_coeffs(c);
  const auto hs = sweep_values(c, dyadic_sweep(3, 7));
  if (c.mu.imag() == 0.0) throw ConfigError("z must be non-real");
  EllipticConvergenceConfig cfg;
  cfg.z = c.mu;
  cfg.h_values = hs;
  cfg.side = c.side > 0.0 ? c.side : coeffs.period();
  cfg.ref_factor = c.ref_factor;
  cfg.power.seed = c.seed;
  const CutoffProfile profile = profile_for(make_square(coeffs.dim()), c.grid_res);
  const std::vector<std::string> variants =
      c.variants.empty() ? std::vector<std::string>{"P_plus", "P_minus"} : c.variants;
  nlohmann::json runs = nlohmann::json::array();
  std::vector<double> slopes;
  for (const auto& v : variants) {
    cfg.variant = parse_variant(v);
    const EllipticConvergenceReport rep = elliptic_convergence(coeffs, profile, cfg);
    runs.push_back({{"variant", v}, {"report", rep.to_json()}});
    slopes.push_back(rep.fit.slope);
    r.assertions.push_back(at_least(v + ": slope", rep.fit.slope, c.min_slope.value_or(0.8)));
  }
  if (slopes.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
    r.assertions.push_back(at_most("slope spread across variants", *hi - *lo, 0.1));
  }
  r.report["results"] = {{"runs", runs}};
  if (c.control) {
    cfg.variant = parse_variant(variants.front());
    const EllipticConvergenceReport ctl =
        elliptic_convergence(CoefficientField::identity(coeffs.dim(), cfg.side), profile, cfg);
    const ConvergenceReport fiber =
        free_convergence(profile, FreeQuantity::resolvent_difference, c.mu, hs, scan_config(c));
    double worst = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i)
      worst = std::max(worst, std::abs(ctl.fit.norms[i] - fiber.norms[i]) / fiber.norms[i]);
    r.report["results"]["control"] = {{"torus", ctl.to_json()}, {"fiber", fiber.to_json()}};
    r.assertions.push_back(at_least("identity control: slope", ctl.fit.slope, 1.9));
    r.assertions.push_back(at_most("identity control: slope deviation from fiber / fiber slope",
                                   std::abs(ctl.fit.slope - fiber.slope) / fiber.slope, 0.1));
    r.assertions.push_back(at_most("identity control: max relative norm deviation from fiber", worst, 0.1));
  }
}

void cmd_spectra(const RunConfig& c, RunResult& r) {
  const auto lats = expand_lattices(c.lattices, "square1");
  if (lats.size() != 1) throw ConfigError("spectra-hausdorff takes one lattice");
  const LatticeSpec lat = resolve_lattice(lats.front());
  const auto hs = sweep_values(c, dyadic_sweep(2, 4));
  PotentialSpec V = PotentialSpec::make(c.potential, c.potential_M);
  SchrodingerConfig cfg;
  cfg.side = c.side > 0.0 ? c.side : 16.0;
  cfg.ref_factor = c.ref_factor;
  V.check(lat.dim(), cfg.side, 1000, c.seed);
  std::ostringstream csv;
  csv << csv_header(c) << "h,d_H,core_mass";
  for (int i = 1; i <= c.k; ++i) csv << ",coarse_" << i;
  for (int i = 1; i <= c.k; ++i) csv << ",reference_" << i;
  csv << '\n';
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> dist;
  for (double h : hs) {
    const SpectrumComparison s = spectra_hausdorff(lat, V, h, c.k, cfg);
    rows.push_back(s.to_json());
    dist.push_back(s.distance);
    csv << fmt(h) << ',' << fmt(s.distance) << ',' << fmt(s.core_mass);
    for (double e : s.coarse) csv << ',' << fmt(e);
    for (double e : s.reference) csv << ',' << fmt(e);
    csv << '\n';
  }
  r.text = csv.str();
  r.report["results"] = {{"potential", V.to_json()}, {"rows", rows}};
  for (std::size_t i = 1; i < dist.size(); ++i)
    r.assertions.push_back(at_most("d_H(h=" + fmt(hs[i]) + ") < d_H(h=" + fmt(hs[i - 1]) + ")", dist[i],
                                   std::nextafter(dist[i - 1], 0.0)));
  if (c.max_distance) r.assertions.push_back(at_most("d_H at smallest h", dist.back(), *c.max_distance));
}

void cmd_elliptic_estimate(const RunConfig& c, RunResult& r) {
  if (c.coeffs.empty()) throw ConfigError("elliptic-estimate needs at least one --coeffs file");
  const auto hs = sweep_values(c, dyadic_sweep(3, 6));
  nlohmann::json out = nlohmann::json::array();
  for (const auto& path : c.coeffs) {
    const CoefficientField coeffs = CoefficientField::load(path);
    EllipticEstimateConfig cfg;
    cfg.h_values = hs;
    cfg.side = c.side > 0.0 ? c.side : coeffs.period();
    cfg.variant = parse_variant(c.variants.empty() ? "P_plus" : c.variants.front());
    cfg.seed = c.seed;
    const EllipticEstimateReport rep = elliptic_estimate_check(coeffs, cfg);
    nlohmann::json entry = {{"coefficients", path}, {"report", rep.to_json()}};
    r.assertions.push_back(at_least(path + ": c1_est", rep.c1_est, c.floor.value_or(1e-6)));

    // uniform relative bound of V against P
    PowerConfig power;
    power.seed = c.seed;
    nlohmann::json bounds = nlohmann::json::array();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double h : hs) {
      const EllipticTorus torus = make_elliptic_torus(coeffs.dim(), h, cfg.side);
      const TorusOperator p = assemble(coeffs, torus, cfg.variant);
      Eigen::VectorXd v(torus.size());
      for (std::size_t s = 0; s < torus.size(); ++s) v[s] = coeffs.V(torus.position(s));
      if (v.isZero(0.0)) break;
      const double shift = std::max(0.0, -v.minCoeff()) + 1.0;
      const double b = relative_bound(p.matrix, v, shift, power).value;
      bounds.push_back({{"h", h}, {"shift", shift}, {"norm_V_resolvent", b}});
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
    if (!bounds.empty()) {
      entry["relative_bound"] = bounds;
      r.assertions.push_back(at_most(path + ": relative bound spread over h (max/min)", hi / lo, 2.0));
    }
    if (c.check_doubling) {
      EllipticEstimateConfig twice = cfg;
      twice.side = 2.0 * cfg.side;
      const EllipticEstimateReport rep2 = elliptic_estimate_check(coeffs, twice);
      entry["doubled"] = rep2.to_json();
      r.assertions.push_back(within(path + ": c2_est ratio at 2N", rep2.c2_est / rep.c2_est, 0.5, 2.0));
    }
    out.push_back(entry);
  }
  r.report["results"] = out;
}

}  // namespace

std::vector<double> Sweep::values(std::size_t min_points) const {
  if (!(h_max > 0.0) || !(h_min > 0.0)) throw ConfigError("sweep bounds must be positive");
  if (h_min > h_max) throw ConfigError("sweep needs h_min <= h_max");
  if (!(factor > 1.0)) throw ConfigError("sweep factor must exceed 1");
  std::vector<double> out;
  for (double h = h_max; h >= h_min * (1.0 - 1e-9); h /= factor) {
    out.push_back(h);
    if (out.size() > 64) throw ConfigError("sweep has too many points");
  }
  if (out.size() < min_points) {
    throw ConfigError("sweep has " + std::to_string(out.size()) + " point(s), need at least " +
                      std::to_string(min_points));
  }
  return out;
}

nlohmann::json Sweep::to_json() const { return {{"h_max", h_max}, {"h_min", h_min}, {"factor", factor}}; }

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"command", command},
                      {"lattices", lattices},
                      {"potential", potential},
                      {"potential_M", potential_M},
                      {"coeffs", coeffs},
                      {"mu", {mu.real(), mu.imag()}},
                      {"grid_res", grid_res},
                      {"points", points},
                      {"refine", refine},
                      {"subdivision", subdivision},
                      {"samples", samples},
                      {"k", k},
                      {"side", side},
                      {"ref_factor", ref_factor},
                      {"variants", variants},
                      {"quantity", quantity},
                      {"symbol_mode", symbol_mode},
                      {"symbol_kind", symbol_kind},
                      {"xi", xi},
                      {"h_values", h_values},
                      {"dim", dim},
                      {"control", control},
                      {"check_doubling", check_doubling},
                      {"seed", seed},
                      {"threads", threads}};
  j["sweep"] = sweep ? sweep->to_json() : nlohmann::json(nullptr);
  for (const auto& [key, v] : {std::pair{"min_slope", min_slope}, std::pair{"max_slope", max_slope},
                               std::pair{"min_r2", min_r2}, std::pair{"floor", floor},
                               std::pair{"max_distance", max_distance}}) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  return j;
}

nlohmann::json Assertion::to_json() const {
  nlohmann::json j = {{"name", name}, {"value", value}, {"relation", relation}, {"bound", bound}, {"pass", pass}};
  if (relation == "in") j["bound"] = {bound, bound_hi};
  return j;
}

std::vector<std::string> RunResult::failures() const {
  std::vector<std::string> out;
  for (const auto& a : assertions) {
    if (a.pass) continue;
    std::string bound = a.relation == "in" ? "[" + fmt(a.bound) + ", " + fmt(a.bound_hi) + "]" : fmt(a.bound);
    out.push_back(a.name + " = " + fmt(a.value) + ", required " + a.relation + " " + bound);
  }
  return out;
}

std::vector<std::string> command_names() {
  return {"symbol",           "embed-check",       "converge-free",    "converge-hex",
          "hex-bands",        "converge-elliptic", "spectra-hausdorff", "elliptic-estimate"};
}

RunResult run(const RunConfig& config) {
  if (config.threads < 1) throw ConfigError("--threads must be positive");
  if (config.grid_res < 0) throw ConfigError("--grid-res must be non-negative");
  if (config.k < 1) throw ConfigError("--k must be positive");
  if (config.ref_factor < 2) throw ConfigError("--ref-factor must be at least 2");
  set_thread_count(config.threads);
  RunResult r;
  r.report = {{"command", config.command}, {"version", kVersion}, {"config", config.to_json()}};
  const std::string& cmd = config.command;
  if (cmd == "symbol") {
    cmd_symbol(config, r);
  } else if (cmd == "embed-check") {
    cmd_embed_check(config, r);
  } else if (cmd == "converge-free") {
    cmd_converge_free(config, r);
  } else if (cmd == "converge-hex") {
    cmd_converge_hex(config, r);
  } else if (cmd == "hex-bands") {
    cmd_hex_bands(config, r);
  } else if (cmd == "converge-elliptic") {
    cmd_converge_elliptic(config, r);
  } else if (cmd == "spectra-hausdorff") {
    cmd_spectra(config, r);
  } else if (cmd == "elliptic-estimate") {
    cmd_elliptic_estimate(config, r);
  } else {
    throw ConfigError("unknown command " + cmd);
  }
  nlohmann::json as = nlohmann::json::array();
  bool ok = true;
  for (const auto& a : r.assertions) {
    as.push_back(a.to_json());
    ok = ok && a.pass;
  }
  r.status = ok ? 0 : 1;
  r.report["assertions"] = as;
  r.report["status"] = ok ? "pass" : "fail";
  if (r.text.empty()) {
    r.text = r.report.dump(2) + "\n";
  } else {
    for (const auto& a : r.assertions) r.text += "# assertion " + a.to_json().dump() + "\n";
  }
  return r;
}

int run_and_write(const RunConfig& config, std::ostream& fallback, std::ostream& log) {
  RunResult r;
  try {
    r = run(config);
  } catch (const std::invalid_argument& e) {
    log << "contlim " << config.command << ": invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    log << "contlim " << config.command << ": invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    log << "contlim " << config.command << ": failed: " << e.what() << '\n';
    return 1;
  }
  if (config.out.empty()) {
    fallback << r.text;
  } else {
    std::ofstream f(config.out, std::ios::binary);
    if (!f) {
      log << "contlim: cannot write " << config.out << '\n';
      return 2;
    }
    f << r.text;
  }
  for (const auto& [label, sec] : r.timings) log << "timing " << label << ' ' << sec << '\n';
  for (const auto& msg : r.failures()) log << "FAILED " << msg << '\n';
  return r.status;
}

cplx parse_complex(const std::string& text) {
  std::istringstream in(text);
  double re = 0.0, im = 0.0;
  char comma = 0;
  if (!(in >> re)) throw ConfigError("cannot parse complex number '" + text + "'");
  if (in >> comma) {
    if (comma != ',' || !(in >> im)) throw ConfigError("cannot parse complex number '" + text + "' (use re,im)");
  }
  std::string rest;
  if (in >> rest) throw ConfigError("trailing characters in complex number '" + text + "'");
  return {re, im};
}

}  // namespace contlim
