#include "contlim/lattice.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace contlim {

LatticeSpec::LatticeSpec(std::string name, Mat generator, std::vector<EdgeGenerator> edges)
    : name_(std::move(name)), generator_(std::move(generator)), edges_(std::move(edges)) {
  const int d = static_cast<int>(generator_.rows());
  if (d < 1 || generator_.cols() != d) throw std::invalid_argument("lattice generator must be square");
  cell_volume_ = std::abs(generator_.determinant());
  if (!(cell_volume_ > 1e-12)) throw std::invalid_argument("lattice generator is singular");
  if (edges_.empty()) throw std::invalid_argument("lattice needs at least one edge generator");

  Mat span(d, edges_.size());
  for (std::size_t j = 0; j < edges_.size(); ++j) {
    const auto& e = edges_[j];
    if (e.coords.size() != d) throw std::invalid_argument("edge generator has wrong dimension");
    if (e.coords.isZero()) throw std::invalid_argument("edge generator must be nonzero");
    if (!(e.weight > 0.0)) throw std::invalid_argument("edge weights must be positive");
    cartesian_edges_.push_back(generator_ * e.coords.cast<double>());
    span.col(j) = cartesian_edges_.back();
  }
  Eigen::FullPivLU<Mat> lu(span);
  lu.setThreshold(1e-10);
  if (lu.rank() != d) throw std::invalid_argument("edge generators do not span R^d (graph not connected)");
}

DualLattice dual_of_generator(const Mat& generator) {
  DualLattice out{generator.inverse().transpose()};
  const Mat check = out.generator.transpose() * generator;
  if (!check.isApprox(Mat::Identity(generator.rows(), generator.cols()), 1e-12) &&
      (check - Mat::Identity(generator.rows(), generator.cols())).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::runtime_error("dual generator failed the pairing check");
  }
  return out;
}

DualLattice dual(const LatticeSpec& spec) { return dual_of_generator(spec.generator()); }

std::vector<IVec> integer_shell(int dim, int radius) {
  std::vector<IVec> out;
  const int side = 2 * radius + 1;
  int total = 1;
  for (int i = 0; i < dim; ++i) total *= side;
  for (int code = 0; code < total; ++code) {
    IVec n(dim);
    int c = code;
    // most significant digit first, so the list is lexicographic
    for (int i = dim - 1; i >= 0; --i) {
      n[i] = c % side - radius;
      c /= side;
    }
    if (!n.isZero()) out.push_back(n);
  }
  return out;
}

ZoneReducer::ZoneReducer(const DualLattice& dual, ZoneKind kind)
    : dual_(dual), kind_(kind), to_coords_(dual.generator.inverse()) {
  shell_coords_ = integer_shell(dual.dim(), kDualShellRadius);
  shell_.reserve(shell_coords_.size());
  for (const auto& n : shell_coords_) shell_.push_back(dual.point(n));
}

ZoneReduction ZoneReducer::operator()(const Vec& xi) const {
  const int d = dual_.dim();
  Vec t = to_coords_ * xi;
  IVec shift(d);
  for (int i = 0; i < d; ++i) shift[i] = static_cast<int>(std::floor(t[i] + 0.5));
  Vec reduced = xi - dual_.point(shift);
  if (kind_ == ZoneKind::first_brillouin) {
    for (int iter = 0; iter < 8; ++iter) {
      const double norm2 = reduced.squaredNorm();
      const double tol = 1e-12 * std::max(1.0, norm2);
      double best = norm2 - tol;
      int best_k = -1;
      for (std::size_t k = 0; k < shell_.size(); ++k) {
        const double cand = (reduced - shell_[k]).squaredNorm();
        if (cand < best) {
          best = cand;
          best_k = static_cast<int>(k);
        }
      }
      if (best_k < 0) break;
      reduced -= shell_[best_k];
      shift += shell_coords_[best_k];
    }
  }
  return {reduced, shift};
}

ZoneReduction reduce_to_zone(const DualLattice& dual, const Vec& xi, ZoneKind kind) {
  return ZoneReducer(dual, kind)(xi);
}

bool in_first_brillouin(const DualLattice& dual, const Vec& xi, double tol) {
  const double norm2 = xi.squaredNorm();
  for (const auto& n : integer_shell(dual.dim(), kDualShellRadius)) {
    if (norm2 > (xi - dual.point(n)).squaredNorm() + tol) return false;
  }
  return true;
}

BrillouinZone brillouin_zone(const DualLattice& dual, int points_per_axis, ZoneKind kind) {
  if (points_per_axis < 2) throw std::invalid_argument("brillouin_zone needs at least 2 points per axis");
  const int d = dual.dim();
  BrillouinZone zone;
  zone.parent = dual;
  zone.kind = kind;
  zone.points_per_axis = points_per_axis;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(points_per_axis);
  zone.points.reserve(total);
  ZoneReducer reducer(dual, ZoneKind::first_brillouin);
  Vec t(d);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (int i = 0; i < d; ++i) {
      t[i] = static_cast<double>(c % points_per_axis) / points_per_axis - 0.5;
      c /= points_per_axis;
    }
    Vec xi = dual.generator * t;
    if (kind == ZoneKind::first_brillouin) xi = reducer(xi).reduced;
    zone.points.push_back(std::move(xi));
  }
  zone.weight = dual.cell_volume() / static_cast<double>(total);
  return zone;
}

namespace {

EdgeGenerator edge(std::initializer_list<int> coords) {
  EdgeGenerator e;
  e.coords.resize(static_cast<int>(coords.size()));
  int i = 0;
  for (int c : coords) e.coords[i++] = c;
  return e;
}

}  // namespace

LatticeSpec make_square(int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("square lattice preset supports d = 1, 2, 3");
  std::vector<EdgeGenerator> edges;
  for (int j = 0; j < dim; ++j) {
    EdgeGenerator e;
    e.coords = IVec::Unit(dim, j);
    edges.push_back(e);
  }
  return LatticeSpec("square" + std::to_string(dim), Mat::Identity(dim, dim), edges);
}

LatticeSpec make_preset(std::string_view name) {
  const double s3 = std::sqrt(3.0);
  if (name == "square1" || name == "square_1") return make_square(1);
  if (name == "square2" || name == "square_2") return make_square(2);
  if (name == "square3" || name == "square_3") return make_square(3);
  if (name == "triangular") {
    Mat L(2, 2);
    L << 1.0, 0.5,
         0.0, s3 / 2.0;
    // (1,0), (1/2, sqrt3/2), (-1/2, sqrt3/2)
    return LatticeSpec("triangular", L, {edge({1, 0}), edge({0, 1}), edge({-1, 1})});
  }
  if (name == "tetrahedral") {
    Mat L(3, 3);
    L << 1.0, 0.5,       0.5,
         0.0, s3 / 2.0,  s3 / 6.0,
         0.0, 0.0,       std::sqrt(2.0 / 3.0);
    // e1, e2, e3, e2 - e1, e3 - e1, e3 - e2
    return LatticeSpec("tetrahedral", L,
                       {edge({1, 0, 0}), edge({0, 1, 0}), edge({0, 0, 1}), edge({-1, 1, 0}),
                        edge({-1, 0, 1}), edge({0, -1, 1})});
  }
  if (name == "octahedral") {
    Mat L(3, 3);
    L << 1.0, 0.0, 0.5,
         0.0, 1.0, 0.5,
         0.0, 0.0, 1.0 / std::sqrt(2.0);
    // e1, e2 and (+-1/2, +-1/2, 1/sqrt2)
    return LatticeSpec("octahedral", L,
                       {edge({1, 0, 0}), edge({0, 1, 0}), edge({0, 0, 1}), edge({-1, 0, 1}),
                        edge({0, -1, 1}), edge({-1, -1, 1})});
  }
  throw std::invalid_argument("unknown lattice preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"square1", "square2", "square3", "triangular", "tetrahedral", "octahedral"};
}

LatticeSpec lattice_from_json(const nlohmann::json& doc) {
  try {
    const int d = doc.at("dim").get<int>();
    const auto gen = doc.at("generator").get<std::vector<double>>();
    if (d < 1 || static_cast<int>(gen.size()) != d * d) {
      throw std::invalid_argument("lattice document: generator must have dim*dim entries");
    }
    Mat L(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) L(i, j) = gen[i * d + j];
    std::vector<EdgeGenerator> edges;
    for (const auto& e : doc.at("edges")) {
      const auto coords = e.at("coords").get<std::vector<int>>();
      EdgeGenerator g;
      g.coords = Eigen::Map<const IVec>(coords.data(), static_cast<int>(coords.size()));
      g.weight = e.value("weight", 1.0);
      edges.push_back(g);
    }
    return LatticeSpec(doc.value("name", std::string("custom")), L, edges);
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("lattice document: ") + ex.what());
  }
}

nlohmann::json lattice_to_json(const LatticeSpec& spec) {
  const int d = spec.dim();
  std::vector<double> gen;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) gen.push_back(spec.generator()(i, j));
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : spec.edges()) {
    edges.push_back({{"coords", std::vector<int>(e.coords.data(), e.coords.data() + d)},
                     {"weight", e.weight}});
  }
  return {{"name", spec.name()}, {"dim", d}, {"generator", gen}, {"edges", edges}};
}

LatticeSpec resolve_lattice(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path)) {
    std::ifstream in(name_or_path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& ex) {
      throw std::invalid_argument("cannot parse lattice file " + name_or_path + ": " + ex.what());
    }
    return lattice_from_json(doc);
  }
  return make_preset(name_or_path);
}

}  // namespace contlim
