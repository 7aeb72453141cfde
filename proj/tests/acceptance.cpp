// Acceptance suite: runs the documented CLI invocation for each criterion,
// re-checks the reported quantities against the criterion thresholds, and
// prints one PASS/FAIL line per criterion.
//
// usage: acceptance <contlim binary> <data dir> <work dir>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Invocation {
  int status = -1;
  double seconds = 0.0;
  std::string out;  // report path
  std::string log;  // stderr
};

std::string g_cli, g_data, g_work;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Invocation invoke(const std::string& tag, const std::string& args) {
  Invocation inv;
  inv.out = g_work + "/" + tag + ".out";
  const std::string err = g_work + "/" + tag + ".log";
  const std::string cmd = g_cli + " " + args + " --out " + inv.out + " 2> " + err;
  std::cout << "  $ contlim " << args << std::endl;
  const auto start = std::chrono::steady_clock::now();
  const int raw = std::system(cmd.c_str());
  inv.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  inv.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  inv.log = slurp(err);
  return inv;
}

// CSV rows of a report, comment lines dropped, header kept as row 0.
std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

struct Check {
  std::vector<std::string> problems;
  void require(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void exit_ok(Check& c, const Invocation& inv) {
  c.require(inv.status == 0, "exit status " + std::to_string(inv.status) + (inv.log.empty() ? "" : ": " + inv.log));
}

const std::string kSweep2to8 = "--hmax 0.25 --hmin 0.00390625";

// 1. free-lattice rates
Check criterion1() {
  Check c;
  const Invocation inv = invoke("c1_converge_free", "converge-free --lattice all --mu 0,1 " + kSweep2to8);
  exit_ok(c, inv);
  const json rep = json::parse(slurp(inv.out));
  const std::vector<std::string> presets{"square1", "square2", "square3", "triangular", "tetrahedral", "octahedral"};
  c.require(rep["results"].size() == presets.size(), "expected one result per preset");
  for (const auto& r : rep["results"]) {
    const std::string name = r["lattice"];
    const double slope = r["slope"], r2 = r["r_squared"];
    c.require(slope >= 1.9 && slope <= 2.1, name + " slope " + num(slope));
    c.require(r2 >= 0.99, name + " R^2 " + num(r2));
    c.require(r["pairs"].size() == 7, name + " sweep is not 2^-2..2^-8");
  }
  std::istringstream log(inv.log);
  int timed = 0;
  for (std::string word, label; log >> word;) {
    if (word != "timing") continue;
    double sec = 0.0;
    log >> label >> sec;
    ++timed;
    c.require(sec < 120.0, label + " took " + num(sec) + " s");
  }
  c.require(timed == static_cast<int>(presets.size()), "missing per-lattice timings");
  return c;
}

// 2. orthonormality of the cutoff translates
Check criterion2() {
  Check c;
  const Invocation inv = invoke("c2_embed_check", "embed-check --lattice all --samples 10000");
  exit_ok(c, inv);
  const json rep = json::parse(slurp(inv.out));
  c.require(rep["results"].size() == 6, "expected six presets");
  for (const auto& r : rep["results"]) {
    const std::string name = r["lattice"];
    c.require(r["orthonormality_max_error"].get<double>() <= 1e-10, name + " orthonormality");
    c.require(r["gram_max_error"].get<double>() <= 1e-6, name + " Gram matrix");
  }
  return c;
}

// 3. hexagonal eigenpairs
Check criterion3() {
  Check c;
  const Invocation inv = invoke("c3_hex_bands", "hex-bands --samples 10000");
  exit_ok(c, inv);
  const auto rows = read_csv(inv.out);
  c.require(rows.size() > 2 && rows[0].size() == 5 && rows[0][1] == "xi1" && rows[0][3] == "E_minus",
            "CSV header");
  if (rows.size() > 1) {
    c.require(std::stod(rows[1][1]) == 0.0 && std::stod(rows[1][2]) == 0.0, "first row is not xi = 0");
    c.require(std::stod(rows[1][3]) == 0.0, "E_minus(0) = " + rows[1][3]);
    c.require(std::stod(rows[1][4]) == 6.0, "E_plus(0) = " + rows[1][4]);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double em = std::stod(rows[i][3]), ep = std::stod(rows[i][4]);
    c.require(em >= -1e-12 && ep <= 6.0 + 1e-12 && em <= ep + 1e-12, "band range violated in row " + std::to_string(i));
  }
  // the eigenpair comparison itself is in the trailing assertion lines
  const std::string text = slurp(inv.out);
  c.require(text.find("\"name\":\"closed-form vs dense eigenvalues\",\"pass\":true") != std::string::npos,
            "eigenvalue comparison");
  c.require(text.find("\"name\":\"closed-form eigenvector residual\",\"pass\":true") != std::string::npos,
            "eigenvector residual");
  return c;
}

// 4. hexagonal chain
Check criterion4() {
  Check c;
  const Invocation inv = invoke("c4_converge_hex", "converge-hex --mu 0,1 " + kSweep2to8);
  exit_ok(c, inv);
  c.require(inv.seconds < 300.0, "runtime " + num(inv.seconds) + " s");
  const json rep = json::parse(slurp(inv.out));
  for (const char* key : {"projector_defect", "intertwining", "combined"}) {
    const double slope = rep["results"][key]["slope"];
    c.require(slope >= 1.9, std::string(key) + " slope " + num(slope));
    c.require(rep["results"][key]["pairs"].size() == 7, std::string(key) + " sweep");
  }
  return c;
}

// 5. difference-symbol estimate
Check criterion5() {
  Check c;
  const Invocation inv = invoke("c5_symbol_difference", "symbol sup --kind difference --dim 2 --hmax 0.5 --hmin 0.00390625");
  exit_ok(c, inv);
  const json rep = json::parse(slurp(inv.out));
  const auto& rows = rep["results"]["rows"];
  c.require(rows.size() == 8, "sweep is not 2^-1..2^-8");
  double lo = 1e300, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r["value"].get<double>());
    hi = std::max(hi, r["value"].get<double>());
  }
  c.require(lo > 0.0 && hi / lo <= 1.5, "variation " + num(hi / lo));
  return c;
}

// 6. discrete elliptic estimate
Check criterion6() {
  Check c;
  const std::string files = "--coeffs " + g_data + "/elliptic_1d.json --coeffs " + g_data + "/elliptic_2d.json";
  const Invocation inv = invoke("c6_elliptic_estimate", "elliptic-estimate " + files + " --floor 0.5");
  exit_ok(c, inv);
  const json rep = json::parse(slurp(inv.out));
  c.require(rep["results"].size() == 2, "expected d=1 and d=2 results");
  for (const auto& r : rep["results"]) {
    const json& e = r["report"];
    const double c1 = e["c1_est"];
    c.require(c1 >= 0.5, r["coefficients"].get<std::string>() + " c1_est " + num(c1));
    int max_n = 0;
    for (const auto& row : e["rows"]) max_n = std::max(max_n, row["n"].get<int>());
    c.require(max_n == 128, "largest N is " + std::to_string(max_n));
  }
  return c;
}

// 7. elliptic convergence
Check criterion7() {
  Check c;
  const Invocation inv =
      invoke("c7_converge_elliptic", "converge-elliptic --coeffs " + g_data +
                                         "/elliptic_1d_potential.json --z 0,1 --ref-factor 8 --sweep 0.125,0.0078125 --control");
  exit_ok(c, inv);
  c.require(inv.seconds < 600.0, "runtime " + num(inv.seconds) + " s");
  const json rep = json::parse(slurp(inv.out));
  for (const auto& run : rep["results"]["runs"]) {
    const double slope = run["report"]["fit"]["slope"];
    c.require(slope >= 0.8, run["variant"].get<std::string>() + " slope " + num(slope));
    c.require(run["report"]["fit"]["pairs"].size() == 5, "sweep is not 2^-3..2^-7");
  }
  const json& ctl = rep["results"]["control"];
  const double s_torus = ctl["torus"]["fit"]["slope"], s_fiber = ctl["fiber"]["slope"];
  c.require(s_torus >= 1.9, "control slope " + num(s_torus));
  c.require(std::abs(s_torus - s_fiber) <= 0.1 * s_fiber, "control vs fiber slope " + num(s_torus) + " / " + num(s_fiber));
  return c;
}

// 8. spectral Hausdorff distance
Check criterion8() {
  Check c;
  const Invocation inv = invoke("c8_spectra", "spectra-hausdorff --lattice square1 --potential harmonic --h 0.25,0.125,0.0625 "
                                              "--k 5 --ref-factor 8 --max-distance 0.05");
  exit_ok(c, inv);
  c.require(inv.seconds < 60.0, "runtime " + num(inv.seconds) + " s");
  const auto rows = read_csv(inv.out);
  c.require(rows.size() == 4 && rows[0][1] == "d_H" && rows[0].size() == 13, "CSV shape");
  if (rows.size() == 4) {
    const double first = std::stod(rows[1][1]), last = std::stod(rows[3][1]);
    c.require(std::stod(rows[1][0]) == 0.25 && std::stod(rows[3][0]) == 0.0625, "h column");
    c.require(last < first, "d_H(2^-4) = " + num(last) + " not below d_H(2^-2) = " + num(first));
    c.require(last <= 0.05, "d_H(2^-4) = " + num(last));
  }
  return c;
}

// 9. determinism: re-run and byte-compare
Check criterion9() {
  Check c;
  const std::vector<std::pair<std::string, std::string>> runs{
      {"symbol_sup", "symbol sup --kind taylor --lattice all"},
      {"symbol_difference", "symbol sup --kind difference --dim 2 --hmax 0.5 --hmin 0.00390625"},
      {"embed_check", "embed-check --lattice triangular --samples 2000 --seed 7"},
      {"converge_free", "converge-free --lattice triangular --mu 0,1 " + kSweep2to8},
      {"converge_free_threads", "converge-free --lattice square2 --threads 2 " + kSweep2to8},
      {"converge_hex", "converge-hex --mu 0,1 " + kSweep2to8},
      {"hex_bands", "hex-bands --samples 10000"},
      {"converge_elliptic", "converge-elliptic --coeffs " + g_data + "/elliptic_1d_potential.json --z 0,1 --ref-factor 8 --sweep 0.125,0.0078125 --control"},
      {"spectra", "spectra-hausdorff --lattice square1 --potential harmonic --h 0.25,0.125,0.0625 --k 5 --ref-factor 8"},
      {"elliptic_estimate", "elliptic-estimate --coeffs " + g_data + "/elliptic_1d.json --coeffs " + g_data +
                                "/elliptic_1d_potential.json --floor 0.5 --check-doubling"},
  };
  for (const auto& [tag, args] : runs) {
    const Invocation a = invoke("c9_" + tag + "_a", args);
    const Invocation b = invoke("c9_" + tag + "_b", args);
    c.require(a.status == 0 && b.status == 0, tag + " exit status");
    const std::string ta = slurp(a.out), tb = slurp(b.out);
    c.require(!ta.empty() && ta == tb, tag + " reports differ");
  }
  // the criterion runs above must reproduce as well
  for (const auto& [tag, args] : std::vector<std::pair<std::string, std::string>>{
           {"c3_hex_bands", "hex-bands --samples 10000"},
           {"c8_spectra", "spectra-hausdorff --lattice square1 --potential harmonic --h 0.25,0.125,0.0625 --k 5 "
                          "--ref-factor 8 --max-distance 0.05"}}) {
    const std::string before = slurp(g_work + "/" + tag + ".out");
    const Invocation again = invoke(tag + "_rerun", args);
    c.require(!before.empty() && before == slurp(again.out), tag + " rerun differs");
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: acceptance <contlim binary> <data dir> <work dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_data = argv[2];
  g_work = argv[3];
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"1 free-lattice rate, all presets, slope in [1.9, 2.1], R^2 >= 0.99, < 2 min per lattice", criterion1},
      {"2 orthonormality <= 1e-10 and 5-block Gram <= 1e-6, all presets", criterion2},
      {"3 hexagonal closed-form eigenpairs <= 1e-12, E(0) = {0, 6}", criterion3},
      {"4 hexagonal chain slopes >= 1.9, < 5 min", criterion4},
      {"5 difference-symbol ratio variation <= 1.5 over h = 2^-1..2^-8", criterion5},
      {"6 elliptic c1 estimate above floor 0.5, d = 1 and 2, N up to 128", criterion6},
      {"7 elliptic convergence slope >= 0.8, identity control within 10% of fiber, < 10 min", criterion7},
      {"8 spectral Hausdorff decreasing and <= 0.05 at h = 2^-4, < 1 min", criterion8},
      {"9 determinism: byte-identical reruns", criterion9},
  };
  int failed = 0;
  for (const auto& [title, body] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = body();
    } catch (const std::exception& e) {
      c.problems.push_back(std::string("exception: ") + e.what());
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = c.problems.empty();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << title << " (" << num(sec) << " s)" << std::endl;
    for (const auto& p : c.problems) std::cout << "    " << p << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
