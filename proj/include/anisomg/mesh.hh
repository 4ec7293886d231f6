#pragma once

/** @file mesh.hh
    @brief Structured coarse/fine grids on the unit square, P1/P2 dof numbering,
    vertex-centred subdomains and the bilinear partition of unity.

    The coarse grid is an nx x ny tensor grid of quads. Each coarse cell is split
    into r x r fine squares and every square into two triangles along its
    (0,0)-(1,1) diagonal, so every coarse edge is a union of fine edges.
*/

#include "anisomg/types.hh"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

namespace anisomg {

struct CoarseGrid {
  int nx = 0;
  int ny = 0;

  double hx() const { return 1.0 / nx; }
  double hy() const { return 1.0 / ny; }
  /// Coarse mesh size used in the estimates.
  double H() const { return std::max(hx(), hy()); }

  int num_vertices() const { return (nx + 1) * (ny + 1); }
  int num_cells() const { return nx * ny; }
  int vertex_index(int I, int J) const { return J * (nx + 1) + I; }
  int cell_index(int I, int J) const { return J * nx + I; }
  Point vertex(int v) const { return {double(v % (nx + 1)) / nx, double(v / (nx + 1)) / ny}; }

  /// Corner vertices of cell c in counter-clockwise order starting at the lower left.
  std::array<int, 4> cell_vertices(int c) const
  {
    const int I = c % nx, J = c / nx;
    return {vertex_index(I, J), vertex_index(I + 1, J), vertex_index(I + 1, J + 1), vertex_index(I, J + 1)};
  }
};

struct FineMesh {
  int refinement = 0;
  int cells_x = 0; ///< fine squares along x
  int cells_y = 0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> triangles; ///< counter-clockwise vertex ids
  /// Local edge k of a triangle joins local vertices k and (k+1)%3.
  std::vector<std::array<int, 3>> triangle_edges;
  std::vector<int> coarse_cell; ///< coarse cell containing each triangle
  std::vector<int> edge_triangle_count;

  int num_vertices() const { return int(vertices.size()); }
  int num_edges() const { return int(edges.size()); }
  int num_triangles() const { return int(triangles.size()); }
};

struct DofMap {
  int degree = 1;
  int num_vertex_dofs = 0;
  int num_edge_dofs = 0;
  std::vector<Point> coords;
  std::vector<char> boundary;
  /// Per triangle: 3 vertex dofs, then (P2 only) the midpoints of local edges 0,1,2.
  std::vector<std::array<int, 6>> cell_dofs;

  int size() const { return num_vertex_dofs + num_edge_dofs; }
  int dofs_per_cell() const { return degree == 1 ? 3 : 6; }
  int num_boundary() const { return int(std::count(boundary.begin(), boundary.end(), 1)); }
};

struct Subdomain {
  int index = 0;
  Point center;
  std::vector<int> coarse_cells;
  std::vector<int> triangles;
  /// Sorted global dof ids; position in this list is the local dof id.
  std::vector<int> dofs;

  int size() const { return int(dofs.size()); }
  /// Local id of a global dof, or -1.
  int local_index(int global) const
  {
    auto it = std::lower_bound(dofs.begin(), dofs.end(), global);
    return (it != dofs.end() && *it == global) ? int(it - dofs.begin()) : -1;
  }
};

struct Grids {
  CoarseGrid coarse;
  FineMesh fine;
  DofMap dofs;
};

inline Grids build_grids(int nx, int ny, int r, int degree)
{
  if (nx < 1 || ny < 1 || r < 1)
    throw ConfigError("build_grids: nx, ny and r must be >= 1 (got " + std::to_string(nx) + ", " + std::to_string(ny) + ", " + std::to_string(r) + ")");
  if (degree != 1 && degree != 2) throw ConfigError("build_grids: degree must be 1 or 2");

  Grids g;
  g.coarse = {nx, ny};

  FineMesh& fm = g.fine;
  fm.refinement = r;
  fm.cells_x = nx * r;
  fm.cells_y = ny * r;
  const int Nx = fm.cells_x, Ny = fm.cells_y;
  const auto vid = [Nx](int i, int j) { return j * (Nx + 1) + i; };

  fm.vertices.reserve(std::size_t(Nx + 1) * (Ny + 1));
  for (int j = 0; j <= Ny; ++j)
    for (int i = 0; i <= Nx; ++i) fm.vertices.push_back({double(i) / Nx, double(j) / Ny});

  fm.triangles.reserve(std::size_t(2) * Nx * Ny);
  fm.coarse_cell.reserve(std::size_t(2) * Nx * Ny);
  for (int j = 0; j < Ny; ++j)
    for (int i = 0; i < Nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      const int cc = g.coarse.cell_index(i / r, j / r);
      fm.triangles.push_back({v00, v10, v11});
      fm.triangles.push_back({v00, v11, v01});
      fm.coarse_cell.push_back(cc);
      fm.coarse_cell.push_back(cc);
    }

  // Edge ids in order of first appearance while walking the triangles.
  std::unordered_map<std::int64_t, int> edge_id;
  const std::int64_t nv = fm.num_vertices();
  fm.triangle_edges.resize(fm.triangles.size());
  for (std::size_t t = 0; t < fm.triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      int a = fm.triangles[t][k], b = fm.triangles[t][(k + 1) % 3];
      if (a > b) std::swap(a, b);
      const std::int64_t key = a * nv + b;
      auto [it, inserted] = edge_id.try_emplace(key, fm.num_edges());
      if (inserted) {
        fm.edges.push_back({a, b});
        fm.edge_triangle_count.push_back(0);
      }
      fm.triangle_edges[t][k] = it->second;
      ++fm.edge_triangle_count[it->second];
    }
  }

  DofMap& dm = g.dofs;
  dm.degree = degree;
  dm.num_vertex_dofs = fm.num_vertices();
  dm.num_edge_dofs = degree == 2 ? fm.num_edges() : 0;
  dm.coords = fm.vertices;
  dm.boundary.assign(dm.size(), 0);
  for (int j = 0; j <= Ny; ++j)
    for (int i = 0; i <= Nx; ++i)
      if (i == 0 || j == 0 || i == Nx || j == Ny) dm.boundary[vid(i, j)] = 1;
  if (degree == 2) {
    for (int e = 0; e < fm.num_edges(); ++e) {
      const Point& a = fm.vertices[fm.edges[e][0]];
      const Point& b = fm.vertices[fm.edges[e][1]];
      dm.coords.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      dm.boundary[dm.num_vertex_dofs + e] = fm.edge_triangle_count[e] == 1 ? 1 : 0;
    }
  }
  dm.cell_dofs.resize(fm.triangles.size());
  for (std::size_t t = 0; t < fm.triangles.size(); ++t) {
    auto& cd = dm.cell_dofs[t];
    cd.fill(-1);
    for (int k = 0; k < 3; ++k) cd[k] = fm.triangles[t][k];
    if (degree == 2)
      for (int k = 0; k < 3; ++k) cd[3 + k] = dm.num_vertex_dofs + fm.triangle_edges[t][k];
  }
  return g;
}

/// One subdomain per coarse vertex: the union of the (up to four) coarse cells sharing it.
inline std::vector<Subdomain> subdomains(const CoarseGrid& cg, const FineMesh& fm, const DofMap& dm)
{
  std::vector<std::vector<int>> cell_triangles(cg.num_cells());
  for (int t = 0; t < fm.num_triangles(); ++t) cell_triangles[fm.coarse_cell[t]].push_back(t);

  std::vector<Subdomain> out(cg.num_vertices());
  for (int J = 0; J <= cg.ny; ++J)
    for (int I = 0; I <= cg.nx; ++I) {
      Subdomain& s = out[cg.vertex_index(I, J)];
      s.index = cg.vertex_index(I, J);
      s.center = cg.vertex(s.index);
      for (int cj = J - 1; cj <= J; ++cj)
        for (int ci = I - 1; ci <= I; ++ci)
          if (ci >= 0 && cj >= 0 && ci < cg.nx && cj < cg.ny) s.coarse_cells.push_back(cg.cell_index(ci, cj));
      std::sort(s.coarse_cells.begin(), s.coarse_cells.end());
      for (int c : s.coarse_cells) s.triangles.insert(s.triangles.end(), cell_triangles[c].begin(), cell_triangles[c].end());
      std::sort(s.triangles.begin(), s.triangles.end());
      for (int t : s.triangles)
        for (int k = 0; k < dm.dofs_per_cell(); ++k) s.dofs.push_back(dm.cell_dofs[t][k]);
      std::sort(s.dofs.begin(), s.dofs.end());
      s.dofs.erase(std::unique(s.dofs.begin(), s.dofs.end()), s.dofs.end());
    }
  return out;
}

inline std::vector<Subdomain> subdomains(const Grids& g) { return subdomains(g.coarse, g.fine, g.dofs); }

namespace detail {
inline double hat(double t) { return std::max(0.0, 1.0 - std::abs(t)); }
} // namespace detail

/// Bilinear partition-of-unity function of coarse vertex i; zero outside its subdomain.
inline double partition_of_unity(const CoarseGrid& cg, int i, Point x)
{
  const Point c = cg.vertex(i);
  return detail::hat((x.x - c.x) / cg.hx()) * detail::hat((x.y - c.y) / cg.hy());
}

/// Gradient of chi_i at a point strictly inside a coarse cell.
inline Vec2 partition_of_unity_gradient(const CoarseGrid& cg, int i, Point x)
{
  const Point c = cg.vertex(i);
  const double tx = (x.x - c.x) / cg.hx(), ty = (x.y - c.y) / cg.hy();
  if (std::abs(tx) >= 1.0 || std::abs(ty) >= 1.0) return {};
  const double sx = tx > 0 ? -1.0 : 1.0, sy = ty > 0 ? -1.0 : 1.0;
  return {sx / cg.hx() * detail::hat(ty), sy / cg.hy() * detail::hat(tx)};
}

/// chi_i evaluated at the local dofs of subdomain s.
inline Vector partition_of_unity_weights(const CoarseGrid& cg, const DofMap& dm, const Subdomain& s)
{
  Vector w(s.size());
  for (int l = 0; l < s.size(); ++l) w[l] = partition_of_unity(cg, s.index, dm.coords[s.dofs[l]]);
  return w;
}

} // namespace anisomg
