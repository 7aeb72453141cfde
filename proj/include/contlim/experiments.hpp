#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contlim/lattice.hpp"

namespace contlim {

inline constexpr const char* kVersion = "1.0.0";

/// Invalid run configuration; the CLI maps it to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// h = h_max, h_max / factor, ... down to h_min (inclusive, up to rounding).
struct Sweep {
  double h_max = 0.25;
  double h_min = 0.00390625;
  double factor = 2.0;

  /// Throws ConfigError unless the sweep is well formed with at least `min_points` values.
  std::vector<double> values(std::size_t min_points = 3) const;
  nlohmann::json to_json() const;
};

struct RunConfig {
  std::string command;
  std::vector<std::string> lattices;  // "all" expands to every preset
  std::string potential = "harmonic";
  double potential_M = 1.0;
  std::vector<std::string> coeffs;    // coefficient files
  cplx mu{0.0, 1.0};                  // also z for the elliptic commands
  std::optional<Sweep> sweep;         // per-command default when empty
  std::vector<double> h_values;       // explicit list; overrides the sweep
  int grid_res = 0;                   // 0: automatic
  int points = 64;                    // scan points per axis
  int refine = 3;
  int subdivision = 8;
  int samples = 10000;                // random checks (embed-check, hex-bands)
  int k = 5;
  double side = 0.0;                  // 0: per-command default
  int ref_factor = 8;
  std::vector<std::string> variants;  // elliptic: P_plus, P_minus
  std::string quantity = "resolvent_difference";
  std::string symbol_mode = "sup";      // symbol eval | sup
  std::string symbol_kind;              // eval: p0, p0h; sup: p0h, taylor, difference
  std::vector<double> xi;               // symbol eval
  int dim = 1;                          // symbol sup --kind difference
  bool control = false;                 // converge-elliptic identity control
  bool check_doubling = false;          // elliptic-estimate re-run at 2N
  std::optional<double> min_slope, max_slope, min_r2, floor, max_distance;
  std::string out;
  std::uint64_t seed = 1;
  int threads = 1;

  nlohmann::json to_json() const;
};

struct Assertion {
  std::string name;
  double value = 0.0;
  std::string relation;  // e.g. ">=", "<=", "in"
  double bound = 0.0;
  double bound_hi = 0.0;  // upper end for "in"
  bool pass = false;

  nlohmann::json to_json() const;
};

struct RunResult {
  int status = 0;  // 0 all assertions pass, 1 some failed
  nlohmann::json report;
  std::string text;  // what is written: JSON, or CSV for the tabular commands
  std::vector<Assertion> assertions;
  std::vector<std::pair<std::string, double>> timings;  // seconds; logged, never written to the report

  std::vector<std::string> failures() const;
};

std::vector<std::string> command_names();

/// Runs one command. Throws ConfigError (or std::invalid_argument /
/// std::domain_error from the library) for bad input.
RunResult run(const RunConfig& config);

/// run() plus output: writes the report to config.out (or `fallback`), prints
/// timings and failing assertions to `log`, and maps exceptions to exit status 2 (input)
/// or 1 (numerical failure).
int run_and_write(const RunConfig& config, std::ostream& fallback, std::ostream& log);

/// "re,im" or "re".
cplx parse_complex(const std::string& text);

}  // namespace contlim
