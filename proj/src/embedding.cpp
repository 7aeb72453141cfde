#include "contlim/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "contlim/parallel.hpp"

namespace contlim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSnap = 1e-13;

// In-place d-dimensional DFT on a cube of side n, axis 0 fastest. The inverse
// includes the 1/n^d factor.
void fft_nd(std::vector<cplx>& data, int dim, long n, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<cplx> line(n), out(n);
  std::size_t stride = 1;
  for (int axis = 0; axis < dim; ++axis) {
    const std::size_t block = stride * static_cast<std::size_t>(n);
    for (std::size_t base = 0; base < data.size(); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (long k = 0; k < n; ++k) line[k] = data[base + off + k * stride];
        if (inverse) {
          fft.inv(out, line);
        } else {
          fft.fwd(out, line);
        }
        for (long k = 0; k < n; ++k) data[base + off + k * stride] = out[k];
      }
    }
    stride = block;
  }
}

// Dual vectors defining the faces of the Wigner-Seitz cell.
std::vector<Vec> relevant_vectors(const DualLattice& dual) {
  std::vector<Vec> shell;
  for (const auto& n : integer_shell(dual.dim(), kDualShellRadius)) shell.push_back(dual.point(n));
  std::vector<Vec> out;
  for (const auto& eta : shell) {
    const Vec mid = 0.5 * eta;
    const double r2 = mid.squaredNorm();
    bool relevant = true;
    for (const auto& other : shell) {
      if ((other - eta).isZero(0.0)) continue;
      if ((mid - other).squaredNorm() < r2 - 1e-12 * std::max(1.0, r2)) {
        relevant = false;
        break;
      }
    }
    if (relevant) out.push_back(eta);
  }
  return out;
}

// Signed distance-like margin to the Wigner-Seitz boundary, positive inside.
double zone_margin(const std::vector<Vec>& faces, const Vec& xi) {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& eta : faces) {
    const double n = eta.norm();
    g = std::min(g, (eta.squaredNorm() - 2.0 * xi.dot(eta)) / (2.0 * n));
  }
  return g;
}

// Vertices of the Wigner-Seitz cell: feasible intersections of d face planes.
std::vector<Vec> zone_vertices(const std::vector<Vec>& faces, int d) {
  std::vector<Vec> out;
  const int m = static_cast<int>(faces.size());
  std::vector<int> pick(d);
  auto feasible = [&](const Vec& x) {
    for (const auto& eta : faces) {
      if (2.0 * x.dot(eta) > eta.squaredNorm() + 1e-9) return false;
    }
    return true;
  };
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == d) {
      Mat a(d, d);
      Vec b(d);
      for (int i = 0; i < d; ++i) {
        a.row(i) = 2.0 * faces[pick[i]].transpose();
        b[i] = faces[pick[i]].squaredNorm();
      }
      Eigen::FullPivLU<Mat> lu(a);
      if (lu.rank() < d) return;
      const Vec x = lu.solve(b);
      if (feasible(x)) out.push_back(x);
      return;
    }
    for (int i = start; i < m; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  if (out.empty()) throw std::runtime_error("could not determine the Brillouin zone vertices");
  return out;
}

std::vector<double> bump_taps(double spacing, double eps) {
  const int half = static_cast<int>(std::ceil(eps / spacing));
  std::vector<double> taps(2 * half + 1, 0.0);
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double t = k * spacing / eps;
    const double w = std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
    taps[k + half] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

std::size_t power(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

}  // namespace

double default_epsilon(const LatticeSpec& lattice) {
  const DualLattice d = dual(lattice);
  double shortest = std::numeric_limits<double>::infinity();
  for (const auto& n : integer_shell(d.dim(), kDualShellRadius)) shortest = std::min(shortest, d.point(n).norm());
  return 0.05 * shortest / 2.0;
}

int default_grid_res(const LatticeSpec& lattice, double eps) {
  const DualLattice d = dual(lattice);
  const auto verts = zone_vertices(relevant_vectors(d), d.dim());
  double width = 0.0;
  for (int i = 0; i < d.dim(); ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : verts) {
      lo = std::min(lo, v[i]);
      hi = std::max(hi, v[i]);
    }
    width = std::max(width, hi - lo);
  }
  return static_cast<int>(std::ceil((width + 2.0 * eps) / (eps / 4.0))) + 5;
}

CutoffProfile CutoffProfile::build(const LatticeSpec& lattice) {
  const double eps = default_epsilon(lattice);
  return build(lattice, eps, default_grid_res(lattice, eps));
}

CutoffProfile CutoffProfile::build(const LatticeSpec& lattice, double eps, int grid_res) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollifier width must be positive");
  if (grid_res < 8) throw std::invalid_argument("cutoff grid needs at least 8 nodes per axis");
  CutoffProfile p(lattice);
  p.eps_ = eps;
  p.grid_res_ = grid_res;
  const int d = lattice.dim();
  const auto faces = relevant_vectors(p.dual_);
  const auto verts = zone_vertices(faces, d);

  p.box_lo_.resize(d);
  p.spacing_.resize(d);
  for (int i = 0; i < d; ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : verts) {
      lo = std::min(lo, v[i]);
      hi = std::max(hi, v[i]);
    }
    const double sp = (hi - lo + 2.0 * eps) / (grid_res - 5);
    if (sp > eps / 2.0) {
      throw std::invalid_argument("cutoff grid too coarse: spacing " + std::to_string(sp) +
                                  " exceeds eps/2 = " + std::to_string(eps / 2.0) +
                                  " (raise grid_res)");
    }
    p.spacing_[i] = sp;
    p.box_lo_[i] = lo - eps - 2.0 * sp;
  }

  const std::size_t n = grid_res;
  const std::size_t total = power(n, d);
  std::vector<double> field(total);
  const double half_diag = 0.5 * p.spacing_.norm();
  constexpr int kSub = 4;
  const std::size_t sub_total = power(kSub, d);
  parallel_chunks(total, [&](std::size_t begin, std::size_t end, int) {
    Vec x(d), q(d);
    for (std::size_t code = begin; code < end; ++code) {
      std::size_t c = code;
      for (int i = 0; i < d; ++i) {
        x[i] = p.box_lo_[i] + static_cast<double>(c % n) * p.spacing_[i];
        c /= n;
      }
      const double g = zone_margin(faces, x);
      if (g > half_diag) {
        field[code] = 1.0;
      } else if (g < -half_diag) {
        field[code] = 0.0;
      } else {
        int inside = 0;
        for (std::size_t s = 0; s < sub_total; ++s) {
          std::size_t sc = s;
          for (int i = 0; i < d; ++i) {
            q[i] = x[i] + ((static_cast<double>(sc % kSub) + 0.5) / kSub - 0.5) * p.spacing_[i];
            sc /= kSub;
          }
          if (zone_margin(faces, q) >= 0.0) ++inside;
        }
        field[code] = static_cast<double>(inside) / static_cast<double>(sub_total);
      }
    }
  });

  // separable convolution with the bump, one axis at a time
  std::vector<double> next(total);
  for (int axis = 0; axis < d; ++axis) {
    const auto taps = bump_taps(p.spacing_[axis], eps);
    const int half = static_cast<int>(taps.size() / 2);
    const std::size_t stride = power(n, axis);
    parallel_chunks(total, [&](std::size_t begin, std::size_t end, int) {
      for (std::size_t code = begin; code < end; ++code) {
        const long pos = static_cast<long>((code / stride) % n);
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) {
          const long src = pos - k;
          if (src < 0 || src >= static_cast<long>(n)) continue;
          acc += taps[k + half] * field[code + (src - pos) * static_cast<long>(stride)];
        }
        next[code] = acc;
      }
    });
    field.swap(next);
  }
  for (double& v : field) {
    if (v >= 1.0 - kSnap) v = 1.0;
    if (v <= kSnap) v = 0.0;
  }
  p.samples_ = std::move(field);
  p.finish_setup();
  p.measure_support();
  return p;
}

void CutoffProfile::finish_setup() {
  const int d = lattice_.dim();
  to_dual_coords_ = dual_.generator.inverse();
  const Vec box_hi = box_lo_ + spacing_ * static_cast<double>(grid_res_ - 1);
  Vec plo(d), phi(d);
  for (int i = 0; i < d; ++i) {
    const double r = 0.5 * dual_.generator.row(i).cwiseAbs().sum();
    plo[i] = -r;
    phi[i] = r;
  }
  const Vec lo = box_lo_ - phi;
  const Vec hi = box_hi - plo;
  int radius = 0;
  for (int i = 0; i < d; ++i) {
    double bound = 0.0;
    for (int j = 0; j < d; ++j) bound += std::abs(to_dual_coords_(i, j)) * std::max(std::abs(lo[j]), std::abs(hi[j]));
    radius = std::max(radius, static_cast<int>(std::ceil(bound)));
  }
  candidate_coords_.clear();
  candidates_.clear();
  auto consider = [&](const IVec& c) {
    const Vec eta = dual_.point(c);
    for (int i = 0; i < d; ++i) {
      if (eta[i] < lo[i] - 1e-12 || eta[i] > hi[i] + 1e-12) return;
    }
    candidate_coords_.push_back(c);
    candidates_.push_back(eta);
  };
  consider(IVec::Zero(d));
  for (const auto& c : integer_shell(d, radius)) consider(c);
}

void CutoffProfile::measure_support() {
  const int d = lattice_.dim();
  const std::size_t n = grid_res_;
  const double diag = spacing_.norm();
  const auto shell_coords = integer_shell(d, kDualShellRadius);
  std::vector<Vec> shell;
  for (const auto& c : shell_coords) shell.push_back(dual_.point(c));
  const ZoneReducer reducer(dual_, ZoneKind::first_brillouin);

  double plateau_edge = std::numeric_limits<double>::infinity();
  double reach = std::numeric_limits<double>::infinity();
  std::set<std::vector<int>> bands;
  bands.insert(std::vector<int>(d, 0));
  Vec x(d);
  for (std::size_t code = 0; code < samples_.size(); ++code) {
    const double v = samples_[code];
    if (v == 1.0) continue;
    std::size_t c = code;
    for (int i = 0; i < d; ++i) {
      x[i] = box_lo_[i] + static_cast<double>(c % n) * spacing_[i];
      c /= n;
    }
    plateau_edge = std::min(plateau_edge, x.norm());
    if (v == 0.0) continue;
    for (const auto& eta : shell) reach = std::min(reach, (x - eta).norm());
    const IVec t = reducer(x).translation;
    bands.insert(std::vector<int>(t.data(), t.data() + d));
  }
  if (reach - diag <= 0.0) {
    throw std::invalid_argument("mollifier width eps = " + std::to_string(eps_) +
                                " too large: the cutoff support reaches a nonzero dual lattice point");
  }
  r0_ = std::min(plateau_edge, reach) - diag;
  if (r0_ <= 0.0) throw std::invalid_argument("cutoff has no plateau around 0 (eps too large)");
  band_set_.clear();
  for (const auto& b : bands) band_set_.push_back(Eigen::Map<const IVec>(b.data(), d));
}

double CutoffProfile::interpolate(const Vec& xi) const {
  const int d = lattice_.dim();
  const int n = grid_res_;
  int base[3];
  double t[3];
  for (int i = 0; i < d; ++i) {
    const double u = (xi[i] - box_lo_[i]) / spacing_[i];
    if (!(u >= 0.0) || u > n - 1) return 0.0;
    int k = static_cast<int>(u);
    if (k > n - 2) k = n - 2;
    base[i] = k;
    t[i] = u - k;
  }
  double corner[8];
  const int count = 1 << d;
  for (int m = 0; m < count; ++m) {
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int i = 0; i < d; ++i) {
      idx += static_cast<std::size_t>(base[i] + ((m >> i) & 1)) * stride;
      stride *= n;
    }
    corner[m] = samples_[idx];
  }
  // nested lerp, axis 0 first; equal corners give that value exactly
  int len = count;
  for (int i = 0; i < d; ++i) {
    len /= 2;
    for (int m = 0; m < len; ++m) {
      const double a = corner[2 * m];
      const double b = corner[2 * m + 1];
      corner[m] = a == b ? a : a + t[i] * (b - a);
    }
  }
  return corner[0];
}

void CutoffProfile::reduce(const Vec& xi, Vec& reduced, IVec& shift) const {
  const Vec t = to_dual_coords_ * xi;
  shift.resize(t.size());
  for (int i = 0; i < t.size(); ++i) shift[i] = static_cast<int>(std::floor(t[i] + 0.5));
  reduced = xi - dual_.point(shift);
}

double CutoffProfile::phi0(const Vec& xi) const {
  if (xi.size() != lattice_.dim()) throw std::invalid_argument("cutoff evaluated at a point of wrong dimension");
  return interpolate(xi);
}

double CutoffProfile::normalizer(const Vec& xi) const {
  Vec kr;
  IVec shift;
  reduce(xi, kr, shift);
  double s = 0.0;
  for (const auto& eta : candidates_) {
    const double v = interpolate(kr + eta);
    s += v * v;
  }
  return s;
}

double CutoffProfile::weight(const Vec& xi) const {
  const double v = phi0(xi);
  if (v == 0.0) return 0.0;
  return v * v / normalizer(xi);
}

double CutoffProfile::phi_hat(const Vec& xi) const {
  const double v = phi0(xi);
  if (v == 0.0) return 0.0;
  return std::sqrt(cell_volume()) * v / std::sqrt(normalizer(xi));
}

void CutoffProfile::band_vector(const Vec& k, std::vector<IVec>& bands, std::vector<double>& values) const {
  bands.clear();
  values.clear();
  Vec kr;
  IVec shift;
  reduce(k, kr, shift);
  double s = 0.0;
  for (std::size_t c = 0; c < candidates_.size(); ++c) {
    const double v = interpolate(kr + candidates_[c]);
    if (v == 0.0) continue;
    bands.push_back(candidate_coords_[c] - shift);
    values.push_back(v);
    s += v * v;
  }
  const double inv = 1.0 / std::sqrt(s);
  for (double& v : values) v *= inv;
}

nlohmann::json CutoffProfile::to_json() const {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : band_set_) bands.push_back(std::vector<int>(b.data(), b.data() + b.size()));
  const int d = lattice_.dim();
  return {{"lattice", lattice_to_json(lattice_)},
          {"eps", eps_},
          {"grid_res", grid_res_},
          {"r0", r0_},
          {"band_set", bands},
          {"mollifier", kMollifierName},
          {"box_lo", std::vector<double>(box_lo_.data(), box_lo_.data() + d)},
          {"spacing", std::vector<double>(spacing_.data(), spacing_.data() + d)},
          {"samples_re", samples_},
          {"samples_im", std::vector<double>(samples_.size(), 0.0)}};
}

CutoffProfile CutoffProfile::from_json(const nlohmann::json& doc) {
  try {
    CutoffProfile p(lattice_from_json(doc.at("lattice")));
    const int d = p.lattice_.dim();
    p.eps_ = doc.at("eps").get<double>();
    p.grid_res_ = doc.at("grid_res").get<int>();
    p.r0_ = doc.at("r0").get<double>();
    for (const auto& b : doc.at("band_set")) {
      const auto v = b.get<std::vector<int>>();
      if (static_cast<int>(v.size()) != d) throw std::invalid_argument("profile document: band of wrong dimension");
      p.band_set_.push_back(Eigen::Map<const IVec>(v.data(), d));
    }
    const auto lo = doc.at("box_lo").get<std::vector<double>>();
    const auto sp = doc.at("spacing").get<std::vector<double>>();
    if (static_cast<int>(lo.size()) != d || static_cast<int>(sp.size()) != d) {
      throw std::invalid_argument("profile document: box of wrong dimension");
    }
    p.box_lo_ = Eigen::Map<const Vec>(lo.data(), d);
    p.spacing_ = Eigen::Map<const Vec>(sp.data(), d);
    p.samples_ = doc.at("samples_re").get<std::vector<double>>();
    const auto im = doc.at("samples_im").get<std::vector<double>>();
    if (p.grid_res_ < 8 || p.samples_.size() != power(p.grid_res_, d) || im.size() != p.samples_.size()) {
      throw std::invalid_argument("profile document: sample count does not match grid_res^dim");
    }
    for (double v : im) {
      if (v != 0.0) throw std::invalid_argument("profile document: cutoff samples must be real");
    }
    p.finish_setup();
    return p;
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("profile document: ") + ex.what());
  }
}

CVec fourier_discrete(const LatticeSpec& lattice, const LatticeSamples& v, const BrillouinZone& zone) {
  if (!(v.h > 0.0)) throw std::invalid_argument("fourier_discrete requires h > 0");
  if (static_cast<std::size_t>(v.values.size()) != v.sites.size()) {
    throw std::invalid_argument("lattice samples: value count does not match site count");
  }
  const int d = lattice.dim();
  const double scale = lattice.cell_volume() * std::pow(v.h, d);
  std::vector<Vec> positions;
  for (const auto& s : v.sites) positions.push_back(lattice.to_cartesian(s));
  CVec out(zone.size());
  parallel_chunks(zone.size(), [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      // (h y) . (p / h) = y . p
      cplx acc = 0.0;
      for (std::size_t j = 0; j < positions.size(); ++j) {
        const double phase = -kTwoPi * positions[j].dot(zone.points[i]);
        acc += std::polar(1.0, phase) * v.values[j];
      }
      out[i] = scale * acc;
    }
  });
  return out;
}

double lattice_norm(const LatticeSpec& lattice, const LatticeSamples& v) {
  return std::sqrt(lattice.cell_volume() * std::pow(v.h, lattice.dim())) * v.values.norm();
}

double zone_norm(const CVec& values, const BrillouinZone& zone, double h) {
  return std::sqrt(zone.weight / std::pow(h, zone.dim())) * values.norm();
}

CVec apply_Th_fiber(const CutoffProfile& profile, double h, const Vec& xi, const CVec& g) {
  if (!(h > 0.0)) throw std::invalid_argument("apply_Th_fiber requires h > 0");
  const auto& bands = profile.band_set();
  if (static_cast<std::size_t>(g.size()) != bands.size()) {
    throw std::invalid_argument("fiber vector length does not match the band set");
  }
  const Vec k = h * xi;
  if (!in_first_brillouin(profile.dual(), k, 1e-9)) {
    throw std::invalid_argument("apply_Th_fiber: h*xi lies outside the Brillouin zone");
  }
  CVec u(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) u[b] = profile.phi_hat(k + profile.dual().point(bands[b]));
  return u * (u.dot(g) / profile.cell_volume());
}

TorusEmbedding::TorusEmbedding(const CutoffProfile& profile, double h, int cells, int samples)
    : dim_(profile.lattice().dim()), h_(h), cells_(cells), samples_(samples) {
  if (!(h > 0.0)) throw std::invalid_argument("embedding requires h > 0");
  if (cells < 1) throw std::invalid_argument("embedding needs at least one cell per axis");
  if (samples < kMinSamplesPerCell) {
    throw std::invalid_argument("continuum grid does not resolve h: " + std::to_string(samples) +
                                " samples per lattice spacing, need at least " +
                                std::to_string(kMinSamplesPerCell));
  }
  const int d = dim_;
  const double omega0 = profile.cell_volume();
  const long period = static_cast<long>(cells) * samples;
  coarse_size_ = power(cells, d);
  fine_size_ = power(period, d);
  coarse_weight_ = omega0 * std::pow(h, d);
  fine_weight_ = omega0 * std::pow(h / samples, d);
  sqrt_omega0_ = std::sqrt(omega0);

  // integer box of frequencies m with B m / cells inside the tabulation box
  const Mat to_m = profile.dual().generator.inverse() * static_cast<double>(cells);
  const Vec lo = profile.box_lo();
  const Vec hi = lo + profile.spacing() * static_cast<double>(profile.grid_res() - 1);
  std::vector<long> mlo(d), mhi(d);
  for (int i = 0; i < d; ++i) {
    double bound = 0.0;
    for (int j = 0; j < d; ++j) bound += std::abs(to_m(i, j)) * std::max(std::abs(lo[j]), std::abs(hi[j]));
    mlo[i] = -static_cast<long>(std::ceil(bound));
    mhi[i] = static_cast<long>(std::ceil(bound));
  }
  std::vector<long> extent(d);
  std::size_t mcount = 1;
  for (int i = 0; i < d; ++i) {
    extent[i] = mhi[i] - mlo[i] + 1;
    mcount *= extent[i];
  }
  // coefficients c_m = phi-hat(B m / cells) / (omega0 cells^d), then a
  // separable partial DFT to the fine offsets
  const double norm = 1.0 / (omega0 * std::pow(static_cast<double>(cells), d));
  std::vector<cplx> data(mcount);
  parallel_chunks(mcount, [&](std::size_t begin, std::size_t end, int) {
    IVec m(d);
    for (std::size_t code = begin; code < end; ++code) {
      std::size_t c = code;
      for (int i = 0; i < d; ++i) {
        m[i] = static_cast<int>(mlo[i] + static_cast<long>(c % extent[i]));
        c /= extent[i];
      }
      data[code] = norm * profile.phi_hat(profile.dual().point(m) / static_cast<double>(cells));
    }
  });
  std::vector<long> shape = extent;
  for (int axis = 0; axis < d; ++axis) {
    std::vector<cplx> table(static_cast<std::size_t>(period) * extent[axis]);
    for (long k = 0; k < period; ++k) {
      for (long j = 0; j < extent[axis]; ++j) {
        const long m = mlo[axis] + j;
        const long r = ((m * k) % period + period) % period;
        table[k * extent[axis] + j] = std::polar(1.0, kTwoPi * static_cast<double>(r) / static_cast<double>(period));
      }
    }
    std::size_t before = 1, after = 1;
    for (int i = 0; i < axis; ++i) before *= shape[i];
    for (int i = axis + 1; i < d; ++i) after *= shape[i];
    std::vector<cplx> out(before * period * after);
    const long len = shape[axis];
    parallel_chunks(after, [&](std::size_t begin, std::size_t end, int) {
      for (std::size_t a = begin; a < end; ++a) {
        for (long k = 0; k < period; ++k) {
          const cplx* row = &table[k * extent[axis]];
          for (std::size_t b = 0; b < before; ++b) {
            cplx acc = 0.0;
            for (long j = 0; j < len; ++j) acc += row[j] * data[(a * len + j) * before + b];
            out[(a * period + k) * before + b] = acc;
          }
        }
      }
    });
    data.swap(out);
    shape[axis] = period;
  }
  fft_nd(data, d, period, false);
  kernel_hat_ = std::move(data);
}

CVec TorusEmbedding::apply(const CVec& v) const {
  if (static_cast<std::size_t>(v.size()) != coarse_size_) throw std::invalid_argument("J_h: input has wrong size");
  const long period = static_cast<long>(cells_) * samples_;
  // upsample onto the fine grid, then circular convolution with the kernel
  std::vector<cplx> w(fine_size_, cplx(0.0));
  std::vector<long> q(dim_, 0);
  for (std::size_t ci = 0; ci < coarse_size_; ++ci) {
    std::size_t fi = 0, stride = 1;
    for (int i = 0; i < dim_; ++i) {
      fi += static_cast<std::size_t>(samples_ * q[i]) * stride;
      stride *= period;
    }
    w[fi] = v[ci];
    for (int i = 0; i < dim_; ++i) {
      if (++q[i] < cells_) break;
      q[i] = 0;
    }
  }
  fft_nd(w, dim_, period, false);
  for (std::size_t i = 0; i < fine_size_; ++i) w[i] *= kernel_hat_[i];
  fft_nd(w, dim_, period, true);
  CVec out(fine_size_);
  for (std::size_t i = 0; i < fine_size_; ++i) out[i] = sqrt_omega0_ * w[i];
  return out;
}

CVec TorusEmbedding::adjoint(const CVec& u) const {
  if (static_cast<std::size_t>(u.size()) != fine_size_) throw std::invalid_argument("J_h*: input has wrong size");
  const long period = static_cast<long>(cells_) * samples_;
  const double scale = sqrt_omega0_ * std::pow(1.0 / samples_, dim_);
  // correlation with the kernel, read off at the coarse sites
  std::vector<cplx> w(u.data(), u.data() + fine_size_);
  fft_nd(w, dim_, period, false);
  for (std::size_t i = 0; i < fine_size_; ++i) w[i] *= std::conj(kernel_hat_[i]);
  fft_nd(w, dim_, period, true);
  CVec out(coarse_size_);
  std::vector<long> q(dim_, 0);
  for (std::size_t ci = 0; ci < coarse_size_; ++ci) {
    std::size_t fi = 0, stride = 1;
    for (int i = 0; i < dim_; ++i) {
      fi += static_cast<std::size_t>(samples_ * q[i]) * stride;
      stride *= period;
    }
    out[ci] = scale * w[fi];
    for (int i = 0; i < dim_; ++i) {
      if (++q[i] < cells_) break;
      q[i] = 0;
    }
  }
  return out;
}

}  // namespace contlim
