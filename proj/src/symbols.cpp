#include "contlim/symbols.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "contlim/parallel.hpp"

namespace contlim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_dim(const LatticeSpec& lattice, const Vec& xi) {
  if (xi.size() != lattice.dim()) {
    throw std::invalid_argument("symbol evaluated at a point of dimension " + std::to_string(xi.size()) +
                                " on a " + std::to_string(lattice.dim()) + "-dimensional lattice");
  }
}
}  // namespace

double eval_p0(const LatticeSpec& lattice, const Vec& xi) {
  check_dim(lattice, xi);
  double sum = 0.0;
  for (int j = 0; j < lattice.edge_count(); ++j) {
    const double t = kTwoPi * lattice.edge_vector(j).dot(xi);
    sum += lattice.edges()[j].weight * t * t;
  }
  return sum;
}

double eval_p0h(const LatticeSpec& lattice, double h, const Vec& xi) {
  if (!(h > 0.0)) throw std::invalid_argument("eval_p0h requires h > 0");
  check_dim(lattice, xi);
  double sum = 0.0;
  for (int j = 0; j < lattice.edge_count(); ++j) {
    // 1 - cos t = 2 sin^2(t/2), without the cancellation at small t
    const double s = std::sin(0.5 * kTwoPi * h * lattice.edge_vector(j).dot(xi));
    sum += lattice.edges()[j].weight * s * s;
  }
  return 4.0 * sum / (h * h);
}

double p0h_upper_bound(const LatticeSpec& lattice, double h) {
  double w = 0.0;
  for (const auto& e : lattice.edges()) w += e.weight;
  return 4.0 * w / (h * h);
}

Mat p0_quadratic_form(const LatticeSpec& lattice) {
  const int d = lattice.dim();
  Mat q = Mat::Zero(d, d);
  for (int j = 0; j < lattice.edge_count(); ++j) {
    const Vec& f = lattice.edge_vector(j);
    q += lattice.edges()[j].weight * f * f.transpose();
  }
  return kTwoPi * kTwoPi * q;
}

ScalarSymbol ScalarSymbol::continuum(const LatticeSpec& lattice) {
  ScalarSymbol s;
  s.kind_ = Kind::continuum_p0;
  s.description_ = "p0[" + lattice.name() + "]";
  s.eval_ = [lattice](const Vec& xi) { return cplx(eval_p0(lattice, xi), 0.0); };
  return s;
}

ScalarSymbol ScalarSymbol::discrete(const LatticeSpec& lattice, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("discrete symbol requires h > 0");
  ScalarSymbol s;
  s.kind_ = Kind::discrete_p0h;
  s.h_ = h;
  s.description_ = "p0h[" + lattice.name() + ", h=" + std::to_string(h) + "]";
  s.eval_ = [lattice, h](const Vec& xi) { return cplx(eval_p0h(lattice, h, xi), 0.0); };
  return s;
}

ScalarSymbol ScalarSymbol::resolvent(const ScalarSymbol& base, cplx mu) {
  if (mu.imag() == 0.0) throw std::invalid_argument("resolvent symbol requires a non-real spectral parameter");
  ScalarSymbol s;
  s.kind_ = Kind::resolvent_of;
  s.h_ = base.h_;
  s.mu_ = mu;
  s.description_ = "(" + base.description_ + " - mu)^-1";
  auto inner = base.eval_;
  s.eval_ = [inner, mu](const Vec& xi) { return 1.0 / (inner(xi) - mu); };
  return s;
}

nlohmann::json ScanConfig::to_json() const {
  return {{"points_per_axis", points_per_axis},
          {"refine_rounds", refine_rounds},
          {"subdivision", subdivision},
          {"zoom_levels", zoom_levels}};
}

nlohmann::json SupResult::to_json() const {
  return {{"value", value},
          {"argmax_xi", std::vector<double>(argmax.data(), argmax.data() + argmax.size())},
          {"grid_config", config.to_json()}};
}

std::vector<Vec> scan_points(const BrillouinZone& zone, int zoom_levels) {
  std::vector<Vec> out;
  out.reserve(zone.size() * (1 + std::max(0, zoom_levels)));
  for (const auto& p : zone.points) out.push_back(p);
  double factor = 1.0;
  for (int l = 1; l <= zoom_levels; ++l) {
    factor *= 0.5;
    for (const auto& p : zone.points) out.push_back(factor * p);
  }
  return out;
}

SupResult refine_sup(const std::function<double(const Vec&)>& f, double value, const Vec& argmax,
                     const Mat& steps, int rounds, int subdivision) {
  if (rounds < 0) throw std::invalid_argument("refinement rounds must be >= 0");
  SupResult best;
  best.value = value;
  best.argmax = argmax;
  const int d = static_cast<int>(argmax.size());
  const int side = 2 * subdivision + 1;
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(side);
  Mat local = steps;
  for (int r = 0; r < rounds; ++r) {
    local /= static_cast<double>(subdivision);
    const Vec centre = best.argmax;
    const Mat step = local;
    auto point = [&](std::size_t code) {
      Vec offset = Vec::Zero(d);
      for (int i = 0; i < d; ++i) {
        offset += static_cast<double>(static_cast<int>(code % side) - subdivision) * step.col(i);
        code /= side;
      }
      return Vec(centre + offset);
    };
    const IndexedMax m = parallel_max(count, [&](std::size_t k) { return f(point(k)); });
    if (m.value > best.value) {
      best.value = m.value;
      best.argmax = point(m.index);
    }
  }
  return best;
}

SupResult sup_over_zone(const std::function<double(const Vec&)>& f, const BrillouinZone& zone,
                        const ScanConfig& config, double scale) {
  if (zone.points.empty()) throw std::invalid_argument("sup_over_zone on an empty grid");
  const auto points = scan_points(zone, config.zoom_levels);
  const IndexedMax m = parallel_max(points.size(), [&](std::size_t i) { return f(scale * points[i]); });
  const int level = static_cast<int>(m.index / zone.size());
  const Mat steps = scale * std::ldexp(1.0, -level) * zone.grid_steps();
  SupResult out = refine_sup(f, m.value, scale * points[m.index], steps, config.refine_rounds,
                             config.subdivision);
  out.config = config;
  out.config.points_per_axis = zone.points_per_axis;
  return out;
}

SupResult sup_over_zone(const std::function<double(const Vec&)>& f, const BrillouinZone& zone,
                        int refine) {
  ScanConfig cfg;
  cfg.points_per_axis = zone.points_per_axis;
  cfg.refine_rounds = refine;
  return sup_over_zone(f, zone, cfg);
}

}  // namespace contlim
