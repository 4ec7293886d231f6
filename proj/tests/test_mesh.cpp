#include "anisomg/mesh.hh"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace anisomg;

TEST(Mesh, SmallestGridHasFourVerticesAndTwoTriangles)
{
  const Grids g = build_grids(1, 1, 1, 1);
  EXPECT_EQ(g.fine.num_vertices(), 4);
  EXPECT_EQ(g.fine.num_triangles(), 2);
  EXPECT_EQ(g.dofs.size(), 4);
  EXPECT_EQ(g.dofs.num_boundary(), 4);
}

TEST(Mesh, TwoByTwoQuadraticCounts)
{
  const Grids g = build_grids(2, 2, 2, 2);
  EXPECT_EQ(g.fine.num_triangles(), 32);
  EXPECT_EQ(g.dofs.num_vertex_dofs, 25);
  EXPECT_EQ(g.dofs.num_edge_dofs, 56);
  EXPECT_EQ(g.dofs.size(), 81);
  // 9 x 9 lattice of dof points, boundary ring of 32.
  EXPECT_EQ(g.dofs.num_boundary(), 32);
}

TEST(Mesh, EulerIdentityOnGeneratedMeshes)
{
  for (int nx : {1, 2, 3})
    for (int r : {1, 2, 5}) {
      const Grids g = build_grids(nx, nx + 1, r, 2);
      EXPECT_EQ(g.fine.num_vertices() - g.fine.num_edges() + g.fine.num_triangles(), 1);
      EXPECT_EQ(g.dofs.size(), g.fine.num_vertices() + g.fine.num_edges());
    }
}

TEST(Mesh, PublishedUnstructuredCountsAreConsistent)
{
  const long vertices = 50547, edges = 150838, cells = 100292;
  EXPECT_EQ(vertices + edges, 201385);
  EXPECT_EQ(vertices - edges + cells, 1);
}

TEST(Mesh, TrianglesAreCounterClockwiseAndTileTheSquare)
{
  const Grids g = build_grids(3, 2, 3, 1);
  double area = 0.0;
  for (const auto& t : g.fine.triangles) {
    const Point a = g.fine.vertices[t[0]], b = g.fine.vertices[t[1]], c = g.fine.vertices[t[2]];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    EXPECT_GT(det, 0.0);
    area += 0.5 * det;
  }
  EXPECT_NEAR(area, 1.0, 1e-14);
}

TEST(Mesh, TrianglesLieInTheirCoarseCell)
{
  const Grids g = build_grids(3, 4, 3, 2);
  for (int t = 0; t < g.fine.num_triangles(); ++t) {
    const int c = g.fine.coarse_cell[t];
    const int I = c % g.coarse.nx, J = c / g.coarse.nx;
    for (int v : g.fine.triangles[t]) {
      const Point p = g.fine.vertices[v];
      EXPECT_GE(p.x, I * g.coarse.hx() - 1e-14);
      EXPECT_LE(p.x, (I + 1) * g.coarse.hx() + 1e-14);
      EXPECT_GE(p.y, J * g.coarse.hy() - 1e-14);
      EXPECT_LE(p.y, (J + 1) * g.coarse.hy() + 1e-14);
    }
  }
}

TEST(Mesh, BoundaryFlagsMatchCoordinates)
{
  const Grids g = build_grids(2, 3, 3, 2);
  for (int i = 0; i < g.dofs.size(); ++i) {
    const Point p = g.dofs.coords[i];
    const bool on = p.x == 0.0 || p.y == 0.0 || std::abs(p.x - 1.0) < 1e-14 || std::abs(p.y - 1.0) < 1e-14;
    EXPECT_EQ(bool(g.dofs.boundary[i]), on) << i;
  }
}

TEST(Mesh, RejectsInvalidInput)
{
  EXPECT_THROW(build_grids(0, 1, 1, 1), ConfigError);
  EXPECT_THROW(build_grids(1, 1, 0, 1), ConfigError);
  EXPECT_THROW(build_grids(1, 1, 1, 3), ConfigError);
}

TEST(Subdomains, OneByOneGridGivesFourWholeDomainSubdomains)
{
  const Grids g = build_grids(1, 1, 3, 2);
  const auto subs = subdomains(g);
  ASSERT_EQ(subs.size(), 4u);
  for (const auto& s : subs) {
    EXPECT_EQ(s.size(), g.dofs.size());
    EXPECT_EQ(int(s.triangles.size()), g.fine.num_triangles());
  }
}

TEST(Subdomains, TenByTenGridGives121)
{
  const Grids g = build_grids(10, 10, 1, 1);
  EXPECT_EQ(subdomains(g).size(), 121u);
}

TEST(Subdomains, InteriorVertexCoversFourCells)
{
  const Grids g = build_grids(3, 3, 2, 1);
  const auto subs = subdomains(g);
  const int v = g.coarse.vertex_index(1, 1);
  EXPECT_EQ(subs[v].coarse_cells.size(), 4u);
  EXPECT_EQ(subs[g.coarse.vertex_index(0, 0)].coarse_cells.size(), 1u);
  EXPECT_EQ(subs[g.coarse.vertex_index(1, 0)].coarse_cells.size(), 2u);
}

TEST(Subdomains, UnionCoversAllDofsAndLocalIndexInverts)
{
  const Grids g = build_grids(3, 2, 3, 2);
  std::set<int> all;
  for (const auto& s : subdomains(g)) {
    for (int l = 0; l < s.size(); ++l) {
      all.insert(s.dofs[l]);
      EXPECT_EQ(s.local_index(s.dofs[l]), l);
    }
    EXPECT_EQ(s.local_index(-5), -1);
  }
  EXPECT_EQ(int(all.size()), g.dofs.size());
}

TEST(PartitionOfUnity, NodalValues)
{
  const CoarseGrid cg{3, 3};
  for (int i = 0; i < cg.num_vertices(); ++i)
    for (int j = 0; j < cg.num_vertices(); ++j) EXPECT_DOUBLE_EQ(partition_of_unity(cg, i, cg.vertex(j)), i == j ? 1.0 : 0.0);
}

TEST(PartitionOfUnity, EdgeMidpointIsHalf)
{
  const CoarseGrid cg{3, 3};
  const int i = cg.vertex_index(1, 1);
  const Point xi = cg.vertex(i);
  EXPECT_DOUBLE_EQ(partition_of_unity(cg, i, {xi.x + 0.5 * cg.hx(), xi.y}), 0.5);
  EXPECT_DOUBLE_EQ(partition_of_unity(cg, i, {xi.x, xi.y - 0.5 * cg.hy()}), 0.5);
}

TEST(PartitionOfUnity, SumsToOneAtRandomPoints)
{
  const CoarseGrid cg{4, 3};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Point x{u(rng), u(rng)};
    double s = 0.0;
    for (int i = 0; i < cg.num_vertices(); ++i) {
      const double w = partition_of_unity(cg, i, x);
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
      s += w;
    }
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(PartitionOfUnity, SumsToOneAtEveryDof)
{
  const Grids g = build_grids(3, 2, 3, 2);
  Vector sum = Vector::Zero(g.dofs.size());
  for (const auto& s : subdomains(g)) {
    const Vector w = partition_of_unity_weights(g.coarse, g.dofs, s);
    for (int l = 0; l < s.size(); ++l) sum[s.dofs[l]] += w[l];
  }
  EXPECT_LT((sum.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(PartitionOfUnity, GradientBoundedByInverseCellSize)
{
  const CoarseGrid cg{5, 4};
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Point x{u(rng), u(rng)};
    for (int i = 0; i < cg.num_vertices(); ++i) {
      const Vec2 gr = partition_of_unity_gradient(cg, i, x);
      EXPECT_LE(std::abs(gr.x), (1.0 + 1e-12) / cg.hx());
      EXPECT_LE(std::abs(gr.y), (1.0 + 1e-12) / cg.hy());
    }
  }
}

TEST(PartitionOfUnity, GradientMatchesFiniteDifference)
{
  const CoarseGrid cg{3, 3};
  const int i = cg.vertex_index(1, 2);
  const Point x{0.41, 0.6};
  const double h = 1e-6;
  const Vec2 gr = partition_of_unity_gradient(cg, i, x);
  EXPECT_NEAR(gr.x, (partition_of_unity(cg, i, {x.x + h, x.y}) - partition_of_unity(cg, i, {x.x - h, x.y})) / (2 * h), 1e-6);
  EXPECT_NEAR(gr.y, (partition_of_unity(cg, i, {x.x, x.y + h}) - partition_of_unity(cg, i, {x.x, x.y - h})) / (2 * h), 1e-6);
}
