#include "tearing/geometry/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

namespace tearing {

void SparseGraph::validate() const {
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.i >= e.j || e.j >= vertex_count) {
      throw std::invalid_argument("edge " + std::to_string(k) + " (" + std::to_string(e.i) + "," +
                                  std::to_string(e.j) + ") is not an ordered pair below " +
                                  std::to_string(vertex_count));
    }
    if (!(e.w > 0.0 && e.w <= 1.0)) {
      throw std::invalid_argument("edge " + std::to_string(k) + " has weight " + std::to_string(e.w) +
                                  " outside (0, 1]");
    }
    if (k > 0) {
      const Edge& p = edges[k - 1];
      if (std::pair(p.i, p.j) >= std::pair(e.i, e.j)) {
        throw std::invalid_argument("edges unsorted or duplicated at " + std::to_string(k));
      }
    }
  }
}

std::vector<std::size_t> SparseGraph::degrees() const {
  std::vector<std::size_t> d(vertex_count, 0);
  for (const Edge& e : edges) {
    ++d[e.i];
    ++d[e.j];
  }
  return d;
}

void GraphConfig::validate() const {
  if (!(epsilon > 0.0)) throw GeometryError("kernel width must be positive");
  if (!(keep_threshold > 0.0 && keep_threshold < 1.0)) {
    throw GeometryError("edge-keep threshold must lie in (0, 1)");
  }
  if (mode == TearMode::kDistance2D && !(radius > 0.0)) {
    throw GeometryError("distance mode needs a positive radius");
  }
}

double grid_spacing(std::size_t n, GridConvention convention) {
  if (n < 2) throw GeometryError("grid dimension must be at least 2, got " + std::to_string(n));
  return convention == GridConvention::kInclusive ? 2.0 / static_cast<double>(n - 1)
                                                  : 2.0 / static_cast<double>(n);
}

PointSet2 make_grid(std::size_t n, GridConvention convention) {
  const double s = grid_spacing(n, convention);
  const double offset = convention == GridConvention::kInclusive ? 0.0 : 0.5;
  std::vector<double> coord(n);
  for (std::size_t i = 0; i < n; ++i) coord[i] = -1.0 + (static_cast<double>(i) + offset) * s;
  if (convention == GridConvention::kInclusive) coord.back() = 1.0;
  PointSet2 grid;
  grid.grid_dim = n;
  grid.points.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) grid.points.push_back({coord[c], coord[r]});
  }
  return grid;
}

GraphConfig distance_config(std::size_t n, double epsilon, GridConvention convention) {
  GraphConfig cfg;
  cfg.epsilon = epsilon;
  cfg.mode = TearMode::kDistance2D;
  cfg.radius = 1.05 * grid_spacing(n, convention);
  return cfg;
}

double kernel_weight(std::span<const double> a, std::span<const double> b, const GraphConfig& cfg) {
  if (a.size() != b.size()) {
    throw GeometryError("kernel between points of dimension " + std::to_string(a.size()) + " and " +
                        std::to_string(b.size()));
  }
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  const double w = std::exp(-d2 / (2.0 * cfg.epsilon * cfg.epsilon));
  if (cfg.mode == TearMode::kDistance2D) return std::sqrt(d2) <= cfg.radius ? w : 0.0;
  return w >= cfg.keep_threshold ? w : 0.0;
}

SparseGraph grid_graph(const PointSet2& grid, const GraphConfig& cfg) {
  if (!grid.grid_dim || *grid.grid_dim * *grid.grid_dim != grid.size()) {
    throw GeometryError("grid_graph needs a regular N x N grid");
  }
  const std::size_t n = *grid.grid_dim;
  SparseGraph g;
  g.vertex_count = grid.size();
  g.edges.reserve(2 * n * (n - 1));
  auto weight = [&](std::size_t i, std::size_t j) {
    const double du = grid.points[i][0] - grid.points[j][0];
    const double dv = grid.points[i][1] - grid.points[j][1];
    return std::exp(-(du * du + dv * dv) / (2.0 * cfg.epsilon * cfg.epsilon));
  };
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      if (c + 1 < n) g.edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1), weight(i, i + 1)});
      if (r + 1 < n) g.edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + n), weight(i, i + n)});
    }
  }
  return g;
}

Positions Positions::from(const PointSet2& u) {
  Positions p{2, {}};
  p.values.reserve(2 * u.size());
  for (const auto& q : u.points) p.values.insert(p.values.end(), q.begin(), q.end());
  return p;
}

Positions Positions::concat(const PointSet2& u, const PointCloud3& x) {
  if (u.size() != x.size()) {
    throw GeometryError("cannot pair " + std::to_string(u.size()) + " 2D points with " +
                        std::to_string(x.size()) + " 3D points");
  }
  Positions p{5, {}};
  p.values.reserve(5 * u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    p.values.insert(p.values.end(), u.points[i].begin(), u.points[i].end());
    p.values.insert(p.values.end(), x.points[i].begin(), x.points[i].end());
  }
  return p;
}

SparseGraph tear_graph(const SparseGraph& initial, const Positions& positions, const GraphConfig& cfg) {
  cfg.validate();
  if (positions.count() != initial.vertex_count) {
    throw GeometryError("tear_graph: " + std::to_string(positions.count()) + " positions for " +
                        std::to_string(initial.vertex_count) + " vertices");
  }
  SparseGraph out;
  out.vertex_count = initial.vertex_count;
  for (const Edge& e : initial.edges) {
    const double w = kernel_weight(positions.row(e.i), positions.row(e.j), cfg);
    if (w > 0.0) out.edges.push_back({e.i, e.j, w});
  }
  return out;
}

Eigen::MatrixXd laplacian(const SparseGraph& g) {
  g.validate();
  const auto m = static_cast<Eigen::Index>(g.vertex_count);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
  for (const Edge& e : g.edges) {
    L(e.i, e.j) -= e.w;
    L(e.j, e.i) -= e.w;
    L(e.i, e.i) += e.w;
    L(e.j, e.j) += e.w;
  }
  return L;
}

PointCloud3 graph_filter(const PointCloud3& x, const SparseGraph& g, double lambda) {
  if (x.size() != g.vertex_count) {
    throw GeometryError("graph_filter: " + std::to_string(x.size()) + " points for " +
                        std::to_string(g.vertex_count) + " vertices");
  }
  PointCloud3 out = x;
  for (const Edge& e : g.edges) {
    for (int k = 0; k < 3; ++k) {
      const double flow = lambda * e.w * (x.points[e.i][k] - x.points[e.j][k]);
      out.points[e.i][k] -= flow;
      out.points[e.j][k] += flow;
    }
  }
  return out;
}

std::size_t connected_components(const SparseGraph& g) {
  std::vector<std::size_t> parent(g.vertex_count);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  std::size_t count = g.vertex_count;
  for (const Edge& e : g.edges) {
    const std::size_t a = find(e.i), b = find(e.j);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
      --count;
    }
  }
  return count;
}

PointCloud3 remove_isolated(const PointCloud3& x, const SparseGraph& torn, std::vector<std::size_t>* kept) {
  if (x.size() != torn.vertex_count) {
    throw GeometryError("remove_isolated: " + std::to_string(x.size()) + " points for " +
                        std::to_string(torn.vertex_count) + " vertices");
  }
  const auto deg = torn.degrees();
  PointCloud3 out;
  if (kept) kept->clear();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (deg[i] == 0) continue;
    out.points.push_back(x.points[i]);
    if (kept) kept->push_back(i);
  }
  return out;
}

std::vector<bool> surviving_faces(std::size_t n, const SparseGraph& torn) {
  if (n < 2 || torn.vertex_count != n * n) {
    throw GeometryError("graph with " + std::to_string(torn.vertex_count) + " vertices is not on a " +
                        std::to_string(n) + "x" + std::to_string(n) + " grid");
  }
  std::vector<bool> right(n * n, false), down(n * n, false);
  for (const Edge& e : torn.edges) {
    if (e.j == e.i + 1 && e.j % n != 0) {
      right[e.i] = true;
    } else if (e.j == e.i + n) {
      down[e.i] = true;
    } else {
      throw GeometryError("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                          ") is not a grid edge");
    }
  }
  std::vector<bool> faces((n - 1) * (n - 1));
  for (std::size_t r = 0; r + 1 < n; ++r) {
    for (std::size_t c = 0; c + 1 < n; ++c) {
      const std::size_t a = r * n + c;
      faces[r * (n - 1) + c] = right[a] && right[a + n] && down[a] && down[a + 1];
    }
  }
  return faces;
}

QuadMesh extract_mesh(std::size_t n, const SparseGraph& torn, const PointCloud3& x) {
  if (x.size() != n * n) {
    throw GeometryError("extract_mesh: " + std::to_string(x.size()) + " points for a " +
                        std::to_string(n) + "x" + std::to_string(n) + " grid");
  }
  const auto faces = surviving_faces(n, torn);
  QuadMesh mesh;
  mesh.vertices = x.points;
  for (std::size_t r = 0; r + 1 < n; ++r) {
    for (std::size_t c = 0; c + 1 < n; ++c) {
      if (!faces[r * (n - 1) + c]) continue;
      const auto a = static_cast<std::uint32_t>(r * n + c);
      const auto nn = static_cast<std::uint32_t>(n);
      mesh.faces.push_back({a, a + 1, a + 1 + nn, a + nn});
    }
  }
  return mesh;
}

std::size_t square_of(const Point2& u, std::size_t n, GridConvention convention) {
  const double s = grid_spacing(n, convention);
  const double shift = convention == GridConvention::kInclusive ? 0.0 : 0.5;
  auto cell = [&](double t) {
    const double f = std::floor((t + 1.0) / s - shift);
    const double clamped = std::clamp(f, 0.0, static_cast<double>(n - 2));
    return static_cast<std::size_t>(clamped);
  };
  return cell(u[1]) * (n - 1) + cell(u[0]);
}

ResampleResult resample(const PointwiseDecoder& decoder, std::size_t count, std::size_t n,
                        const std::vector<bool>& faces, Rng& rng, std::size_t retry_factor,
                        GridConvention convention) {
  if (faces.size() != (n - 1) * (n - 1)) {
    throw GeometryError("face mask has " + std::to_string(faces.size()) + " entries, expected " +
                        std::to_string((n - 1) * (n - 1)));
  }
  ResampleResult result;
  if (count == 0) return result;
  const std::size_t cap = retry_factor * count;
  PointSet2 kept;
  while (kept.size() < count) {
    if (result.drawn >= cap) {
      throw ResampleError("resampling gave up after " + std::to_string(result.drawn) + " draws with " +
                          std::to_string(kept.size()) + " of " + std::to_string(count) +
                          " points on surviving faces");
    }
    const Point2 u{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    ++result.drawn;
    if (faces[square_of(u, n, convention)]) kept.points.push_back(u);
  }
  result.accepted = kept.size();
  result.points = decoder(kept);
  return result;
}

namespace {
std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}
}  // namespace

void write_obj(const QuadMesh& mesh, const std::filesystem::path& path) {
  auto os = open_out(path);
  for (const auto& v : mesh.vertices) {
    os << "v " << fmt("%.9g", v[0]) << ' ' << fmt("%.9g", v[1]) << ' ' << fmt("%.9g", v[2]) << '\n';
  }
  for (const auto& f : mesh.faces) {
    os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << ' ' << f[3] + 1 << '\n';
  }
}

void write_graph_csv(const SparseGraph& g, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "i,j,w\n";
  for (const Edge& e : g.edges) os << e.i << ',' << e.j << ',' << fmt("%.17g", e.w) << '\n';
}

void write_points2_csv(const PointSet2& u, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "index,u,v\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    os << i << ',' << fmt("%.9g", u.points[i][0]) << ',' << fmt("%.9g", u.points[i][1]) << '\n';
  }
}

}  // namespace tearing
