#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "contlim/experiments.hpp"

namespace {

struct Options {
  contlim::RunConfig config;
  std::string mu = "0,1";
  std::string sweep;
  double h_max = 0.0, h_min = 0.0, factor = 2.0;
  double min_slope = 0.0, max_slope = 0.0, min_r2 = 0.0, floor = 0.0, max_distance = 0.0;
};

void add_sweep(CLI::App* sub, Options& o) {
  sub->add_option("--h-max,--hmax", o.h_max, "largest h of the sweep");
  sub->add_option("--h-min,--hmin", o.h_min, "smallest h of the sweep");
  sub->add_option("--factor", o.factor, "ratio between consecutive h");
  sub->add_option("--sweep", o.sweep, "H_MAX,H_MIN[,FACTOR]");
  sub->add_option("--h", o.config.h_values, "explicit h values (comma separated or repeated)")->delimiter(',');
}

void add_scan(CLI::App* sub, Options& o) {
  sub->add_option("--points", o.config.points, "quasimomentum grid points per axis");
  sub->add_option("--refine", o.config.refine, "local refinement rounds around the sup");
  sub->add_option("--subdivision", o.config.subdivision, "refinement grid per round");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuum limits of lattice operators: numerical checks"};
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", contlim::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  auto& c = o.config;
  app.add_option("--out", c.out, "output file (default: stdout)");
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--threads", c.threads, "worker threads");
  app.add_option("--grid-res", c.grid_res, "cutoff profile grid resolution (0: automatic)");

  auto* symbol = app.add_subcommand("symbol", "lattice and difference symbols");
  symbol->require_subcommand(1);
  symbol->fallthrough();
  auto* eval = symbol->add_subcommand("eval", "evaluate p0 or p0h at one quasimomentum");
  eval->add_option("--lattice", c.lattices, "lattice preset or JSON file");
  eval->add_option("--kind", c.symbol_kind, "p0 or p0h")->check(CLI::IsMember({"p0", "p0h"}));
  eval->add_option("--xi", c.xi, "quasimomentum, comma separated")->delimiter(',')->required();
  eval->add_option("--h", c.h_values, "lattice spacing(s)")->delimiter(',');
  auto* sup = symbol->add_subcommand("sup", "supremum scans: p0h, taylor, difference");
  sup->add_option("--lattice", c.lattices, "lattice preset, JSON file, or all");
  sup->add_option("--kind", c.symbol_kind, "p0h, taylor or difference")
      ->check(CLI::IsMember({"p0h", "taylor", "difference"}));
  sup->add_option("--dim", c.dim, "dimension for --kind difference");
  sup->add_option("--h-max,--hmax", o.h_max, "largest h of the sweep");
  sup->add_option("--h-min,--hmin", o.h_min, "smallest h of the sweep");
  sup->add_option("--factor", o.factor, "ratio between consecutive h");
  sup->add_option("--sweep", o.sweep, "H_MAX,H_MIN[,FACTOR]");
  sup->add_option("--h", c.h_values, "explicit h values")->delimiter(',');
  add_scan(sup, o);

  auto* embed = app.add_subcommand("embed-check", "orthonormality of the cutoff translates");
  embed->add_option("--lattice", c.lattices, "lattice preset, JSON file, or all");
  embed->add_option("--samples", c.samples, "random quasimomenta");

  auto* free = app.add_subcommand("converge-free", "free resolvent convergence rate");
  free->add_option("--lattice", c.lattices, "lattice preset, JSON file, or all");
  free->add_option("--mu", o.mu, "spectral parameter re,im");
  free->add_option("--quantity", c.quantity, "resolvent_difference, one_minus_JJ or adjoint_difference");
  free->add_option("--min-slope", o.min_slope, "lower slope bound");
  free->add_option("--max-slope", o.max_slope, "upper slope bound");
  free->add_option("--min-r2", o.min_r2, "lower bound on the fit R^2");
  add_sweep(free, o);
  add_scan(free, o);

  auto* hex = app.add_subcommand("converge-hex", "hexagonal chain of estimates");
  hex->add_option("--mu", o.mu, "spectral parameter re,im");
  hex->add_option("--min-slope", o.min_slope, "lower slope bound");
  add_sweep(hex, o);
  add_scan(hex, o);

  auto* bands = app.add_subcommand("hex-bands", "hexagonal dispersion along Gamma-K-M-Gamma (CSV)");
  bands->add_option("--points", c.points, "points per path segment");
  bands->add_option("--samples", c.samples, "random quasimomenta for the eigenpair check");

  auto* ell = app.add_subcommand("converge-elliptic", "variable-coefficient resolvent convergence");
  ell->add_option("--coeffs", c.coeffs, "coefficient JSON file")->required();
  ell->add_option("--z", o.mu, "non-real spectral parameter re,im");
  ell->add_option("--variant", c.variants, "P_plus, P_minus, H0h, Q_plus, Q_minus (repeatable)");
  ell->add_option("--side", c.side, "torus side (default: coefficient period)");
  ell->add_option("--ref-factor", c.ref_factor, "reference refinement factor");
  ell->add_option("--min-slope", o.min_slope, "lower slope bound");
  ell->add_flag("--control", c.control, "also run identity coefficients against the fiber computation");
  add_sweep(ell, o);
  add_scan(ell, o);

  auto* spec = app.add_subcommand("spectra-hausdorff", "low spectrum of H_h vs a refined reference (CSV)");
  spec->add_option("--lattice", c.lattices, "lattice preset or JSON file");
  spec->add_option("--potential", c.potential, "zero, harmonic or formula:EXPR");
  spec->add_option("--M", c.potential_M, "constant with V + M >= 1");
  spec->add_option("--k", c.k, "number of eigenvalues");
  spec->add_option("--side", c.side, "box side");
  spec->add_option("--ref-factor", c.ref_factor, "reference refinement factor");
  spec->add_option("--max-distance", o.max_distance, "bound on d_H at the smallest h");
  add_sweep(spec, o);

  auto* est = app.add_subcommand("elliptic-estimate", "uniform ellipticity constants of P_h");
  est->add_option("--coeffs", c.coeffs, "coefficient JSON files")->required();
  est->add_option("--variant", c.variants, "operator variant");
  est->add_option("--side", c.side, "torus side (default: coefficient period)");
  est->add_option("--floor", o.floor, "lower bound on the uniform c1");
  est->add_flag("--check-doubling", c.check_doubling, "repeat at twice the side and compare c2");
  add_sweep(est, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  c.command = chosen->get_name();
  if (c.command == "symbol") {
    chosen = chosen->get_subcommands().front();
    c.symbol_mode = chosen->get_name();
  }
  auto given = [&](const char* name) {
    const CLI::Option* opt = chosen->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  try {
    c.mu = contlim::parse_complex(o.mu);
    if (given("--sweep")) {
      if (given("--h-max") || given("--h-min") || given("--factor"))
        throw std::invalid_argument("--sweep cannot be combined with --h-max/--h-min/--factor");
      std::vector<double> parts;
      std::stringstream in(o.sweep);
      for (std::string item; std::getline(in, item, ',');) parts.push_back(std::stod(item));
      if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument("--sweep expects H_MAX,H_MIN[,FACTOR]");
      c.sweep = contlim::Sweep{parts[0], parts[1], parts.size() == 3 ? parts[2] : 2.0};
    } else if (given("--h-max") || given("--h-min") || given("--factor")) {
      contlim::Sweep s;
      if (given("--h-max")) s.h_max = o.h_max;
      if (given("--h-min")) s.h_min = o.h_min;
      s.factor = o.factor;
      c.sweep = s;
    }
    if (c.sweep && !c.h_values.empty()) throw std::invalid_argument("give either --h or a sweep, not both");
  } catch (const std::invalid_argument& e) {
    std::cerr << "contlim: " << e.what() << '\n';
    return 2;
  }
  if (given("--min-slope")) c.min_slope = o.min_slope;
  if (given("--max-slope")) c.max_slope = o.max_slope;
  if (given("--min-r2")) c.min_r2 = o.min_r2;
  if (given("--floor")) c.floor = o.floor;
  if (given("--max-distance")) c.max_distance = o.max_distance;

  return contlim::run_and_write(c, std::cout, std::cerr);
}
