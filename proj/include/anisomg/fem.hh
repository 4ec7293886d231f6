#pragma once

/** @file fem.hh
    @brief Continuous P1/P2 Galerkin assembly of mass, anisotropic stiffness and
    source, symmetric Dirichlet elimination and backward-Euler stepping.

    Stiffness uses the conductivity tensor K(x) = k_perp I + k_delta b b^T, split
    into an isotropic part (k_perp grad u . grad v) and an anisotropic part
    (k_delta (b . grad u)(b . grad v)).
*/

#include "anisomg/field.hh"
#include "anisomg/mesh.hh"
#include "anisomg/quadrature.hh"
#include "anisomg/types.hh"

#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace anisomg {

using ElementMatrix = Eigen::Matrix<double, 6, 6>;
using ElementVector = Eigen::Matrix<double, 6, 1>;

struct ElementGeometry {
  std::array<Point, 3> p;
  double area = 0.0;
  std::array<Vec2, 3> grad_lambda; ///< constant gradients of the barycentric coordinates

  Point map(double xi, double eta) const
  {
    return {p[0].x + xi * (p[1].x - p[0].x) + eta * (p[2].x - p[0].x), p[0].y + xi * (p[1].y - p[0].y) + eta * (p[2].y - p[0].y)};
  }
};

inline ElementGeometry element_geometry(const FineMesh& fm, int t)
{
  ElementGeometry geo;
  for (int k = 0; k < 3; ++k) geo.p[k] = fm.vertices[fm.triangles[t][k]];
  const double x10 = geo.p[1].x - geo.p[0].x, y10 = geo.p[1].y - geo.p[0].y;
  const double x20 = geo.p[2].x - geo.p[0].x, y20 = geo.p[2].y - geo.p[0].y;
  const double det = x10 * y20 - x20 * y10;
  if (!(det > 0.0)) throw Error("element_geometry: degenerate or clockwise triangle " + std::to_string(t));
  geo.area = 0.5 * det;
  geo.grad_lambda[1] = {y20 / det, -x20 / det};
  geo.grad_lambda[2] = {-y10 / det, x10 / det};
  geo.grad_lambda[0] = {-geo.grad_lambda[1].x - geo.grad_lambda[2].x, -geo.grad_lambda[1].y - geo.grad_lambda[2].y};
  return geo;
}

struct ShapeValues {
  int n = 0;
  std::array<double, 6> phi{};
  std::array<Vec2, 6> grad{};
};

/// Lagrange basis at reference point (xi, eta). P2 order: vertices 0,1,2 then edges (0,1),(1,2),(2,0).
inline ShapeValues shape_functions(int degree, const ElementGeometry& geo, double xi, double eta)
{
  const std::array<double, 3> l{1.0 - xi - eta, xi, eta};
  const auto& g = geo.grad_lambda;
  ShapeValues s;
  if (degree == 1) {
    s.n = 3;
    for (int k = 0; k < 3; ++k) {
      s.phi[k] = l[k];
      s.grad[k] = g[k];
    }
    return s;
  }
  s.n = 6;
  for (int k = 0; k < 3; ++k) {
    s.phi[k] = l[k] * (2.0 * l[k] - 1.0);
    s.grad[k] = {(4.0 * l[k] - 1.0) * g[k].x, (4.0 * l[k] - 1.0) * g[k].y};
  }
  for (int k = 0; k < 3; ++k) {
    const int a = k, b = (k + 1) % 3;
    s.phi[3 + k] = 4.0 * l[a] * l[b];
    s.grad[3 + k] = {4.0 * (l[a] * g[b].x + l[b] * g[a].x), 4.0 * (l[a] * g[b].y + l[b] * g[a].y)};
  }
  return s;
}

inline ElementMatrix mirror_upper(ElementMatrix K)
{
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < a; ++b) K(a, b) = K(b, a);
  return K;
}

enum class StiffnessPart { Full, Isotropic, Anisotropic };

inline ElementMatrix element_mass(const Grids& g, int t, const TriangleRule& rule)
{
  const ElementGeometry geo = element_geometry(g.fine, t);
  ElementMatrix K = ElementMatrix::Zero();
  for (const auto& q : rule) {
    const ShapeValues s = shape_functions(g.dofs.degree, geo, q.xi, q.eta);
    const double w = q.weight * geo.area;
    for (int a = 0; a < s.n; ++a)
      for (int b = a; b < s.n; ++b) K(a, b) += w * s.phi[a] * s.phi[b];
  }
  return mirror_upper(K);
}

inline ElementMatrix element_stiffness(const Grids& g, int t, const FieldSpec& spec, const TriangleRule& rule, StiffnessPart part = StiffnessPart::Full)
{
  const ElementGeometry geo = element_geometry(g.fine, t);
  const double ciso = part == StiffnessPart::Anisotropic ? 0.0 : spec.k_perp;
  const double cani = part == StiffnessPart::Isotropic ? 0.0 : spec.k_delta();
  ElementMatrix K = ElementMatrix::Zero();
  for (const auto& q : rule) {
    const ShapeValues s = shape_functions(g.dofs.degree, geo, q.xi, q.eta);
    const Vec2 b = cani != 0.0 ? eval_b(spec, geo.map(q.xi, q.eta)) : Vec2{};
    const double w = q.weight * geo.area;
    std::array<double, 6> db{};
    for (int a = 0; a < s.n; ++a) db[a] = b.dot(s.grad[a]);
    for (int a = 0; a < s.n; ++a)
      for (int c = a; c < s.n; ++c) K(a, c) += w * (ciso * s.grad[a].dot(s.grad[c]) + cani * db[a] * db[c]);
  }
  return mirror_upper(K);
}

/// Scatter element matrices of the listed triangles into an n x n matrix; map(global dof) gives the row index.
template <class ElementFn, class DofMapFn>
SparseMatrix assemble_over(const Grids& g, const std::vector<int>& triangles, int n, ElementFn&& element, DofMapFn&& map)
{
  const int nl = g.dofs.dofs_per_cell();
  std::vector<Triplet> trips;
  trips.reserve(triangles.size() * nl * nl);
  for (int t : triangles) {
    const ElementMatrix K = element(t);
    std::array<int, 6> idx{};
    for (int a = 0; a < nl; ++a) idx[a] = map(g.dofs.cell_dofs[t][a]);
    for (int a = 0; a < nl; ++a)
      for (int b = 0; b < nl; ++b) trips.emplace_back(idx[a], idx[b], K(a, b));
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

inline std::vector<int> all_triangles(const Grids& g)
{
  std::vector<int> t(g.fine.num_triangles());
  for (int i = 0; i < int(t.size()); ++i) t[i] = i;
  return t;
}

/// Exact structural and numerical symmetrization 0.5 (A + A^T).
inline SparseMatrix symmetrized(const SparseMatrix& A)
{
  SparseMatrix At = A.transpose();
  SparseMatrix S = 0.5 * (A + At);
  S.makeCompressed();
  return S;
}

inline SparseMatrix assemble_mass(const Grids& g, const TriangleRule& rule = degree4_rule())
{
  return symmetrized(assemble_over(g, all_triangles(g), g.dofs.size(), [&](int t) { return element_mass(g, t, rule); }, [](int d) { return d; }));
}

inline SparseMatrix assemble_stiffness(const Grids& g, const FieldSpec& spec, StiffnessPart part = StiffnessPart::Full, const TriangleRule& rule = degree4_rule())
{
  spec.validate();
  return symmetrized(assemble_over(g, all_triangles(g), g.dofs.size(), [&](int t) { return element_stiffness(g, t, spec, rule, part); }, [](int d) { return d; }));
}

struct StiffnessParts {
  SparseMatrix iso;
  SparseMatrix aniso;

  SparseMatrix total() const
  {
    SparseMatrix A = iso + aniso;
    A.makeCompressed();
    return A;
  }
};

inline StiffnessParts assemble_stiffness_parts(const Grids& g, const FieldSpec& spec)
{
  return {assemble_stiffness(g, spec, StiffnessPart::Isotropic), assemble_stiffness(g, spec, StiffnessPart::Anisotropic)};
}

/// Neumann stiffness re-assembled over the triangles of one subdomain, in its local dof numbering.
inline SparseMatrix assemble_local_stiffness(const Grids& g, const FieldSpec& spec, const Subdomain& sub, StiffnessPart part = StiffnessPart::Full,
                                             const TriangleRule& rule = degree4_rule())
{
  spec.validate();
  return symmetrized(assemble_over(g, sub.triangles, sub.size(), [&](int t) { return element_stiffness(g, t, spec, rule, part); },
                                   [&](int d) { return sub.local_index(d); }));
}

/// Default rule for right-hand sides: 12x12 collapsed Gauss, exact to degree 22.
inline TriangleRule source_rule() { return collapsed_gauss_rule(12); }

/// F[j] = integral of f phi_j.
inline Vector assemble_source(const Grids& g, const std::function<double(Point)>& f, const TriangleRule& rule = source_rule())
{
  Vector F = Vector::Zero(g.dofs.size());
  const int nl = g.dofs.dofs_per_cell();
  for (int t = 0; t < g.fine.num_triangles(); ++t) {
    const ElementGeometry geo = element_geometry(g.fine, t);
    ElementVector fe = ElementVector::Zero();
    for (const auto& q : rule) {
      const ShapeValues s = shape_functions(g.dofs.degree, geo, q.xi, q.eta);
      const double fw = q.weight * geo.area * f(geo.map(q.xi, q.eta));
      for (int a = 0; a < nl; ++a) fe[a] += fw * s.phi[a];
    }
    for (int a = 0; a < nl; ++a) F[g.dofs.cell_dofs[t][a]] += fe[a];
  }
  return F;
}

/// Source from nodal data: F = M f_h, exact for f in the finite element space.
inline Vector assemble_source_nodal(const SparseMatrix& mass, const Vector& nodal)
{
  if (nodal.size() != mass.rows()) throw DimensionError("assemble_source_nodal: size mismatch");
  return mass * nodal;
}

/// T0(x) = exp(-|x - c|^2 / sigma^2).
struct GaussianBump {
  Point center{0.35, 0.4};
  double sigma = 0.15;

  double value(Point x) const
  {
    const double dx = x.x - center.x, dy = x.y - center.y;
    return std::exp(-(dx * dx + dy * dy) / (sigma * sigma));
  }

  double laplacian(Point x) const
  {
    const double dx = x.x - center.x, dy = x.y - center.y;
    const double s2 = sigma * sigma;
    return value(x) * (4.0 * (dx * dx + dy * dy) / (s2 * s2) - 4.0 / s2);
  }

  void validate() const
  {
    if (!(sigma > 0.0)) throw ConfigError("initial condition: sigma must be > 0");
  }
};

inline Vector interpolate(const DofMap& dm, const std::function<double(Point)>& f)
{
  Vector v(dm.size());
  for (int i = 0; i < dm.size(); ++i) v[i] = f(dm.coords[i]);
  return v;
}

/// Operator with boundary rows and columns eliminated and a unit diagonal on the boundary.
struct DirichletSystem {
  SparseMatrix matrix;
  /// Entries (i, j) of the original operator with i interior and j on the boundary.
  SparseMatrix coupling;
  std::vector<char> mask;
  Vector values; ///< boundary values g; interior entries are zero

  /// rhs - coupling g on the interior, g on the boundary.
  Vector lift(const Vector& rhs) const
  {
    if (rhs.size() != matrix.rows()) throw DimensionError("DirichletSystem::lift: size mismatch");
    Vector b = rhs - coupling * values;
    for (Index i = 0; i < b.size(); ++i)
      if (mask[i]) b[i] = values[i];
    return b;
  }
};

inline DirichletSystem eliminate_dirichlet(const SparseMatrix& op, const std::vector<char>& mask, const Vector& g)
{
  const Index n = op.rows();
  if (op.cols() != n || Index(mask.size()) != n || g.size() != n) throw DimensionError("eliminate_dirichlet: size mismatch");
  std::vector<Triplet> keep, couple;
  keep.reserve(op.nonZeros());
  for (int i = 0; i < n; ++i) {
    if (mask[i]) {
      keep.emplace_back(i, i, 1.0);
      continue;
    }
    for (SparseMatrix::InnerIterator it(op, i); it; ++it) {
      if (mask[it.col()]) couple.emplace_back(i, int(it.col()), it.value());
      else keep.emplace_back(i, int(it.col()), it.value());
    }
  }
  DirichletSystem d;
  d.matrix.resize(n, n);
  d.matrix.setFromTriplets(keep.begin(), keep.end());
  d.matrix.makeCompressed();
  d.coupling.resize(n, n);
  d.coupling.setFromTriplets(couple.begin(), couple.end());
  d.coupling.makeCompressed();
  d.mask = mask;
  d.values = Vector::Zero(n);
  for (Index i = 0; i < n; ++i)
    if (mask[i]) d.values[i] = g[i];
  return d;
}

inline std::pair<SparseMatrix, Vector> apply_dirichlet(const SparseMatrix& op, const Vector& rhs, const Vector& g, const std::vector<char>& mask)
{
  DirichletSystem d = eliminate_dirichlet(op, mask, g);
  Vector b = d.lift(rhs);
  return {std::move(d.matrix), std::move(b)};
}

struct TransientProblem {
  double tau = 5e-7;
  int steps = 10;
  Vector initial;         ///< T0
  Vector boundary_values; ///< g, full length; only boundary entries are used
  std::vector<char> boundary_mask;
  Vector source; ///< F_h

  void validate() const
  {
    if (!(tau > 0.0)) throw ConfigError("transient problem: tau must be > 0");
    if (steps < 0) throw ConfigError("transient problem: steps must be >= 0");
    const Index n = initial.size();
    if (boundary_values.size() != n || source.size() != n || Index(boundary_mask.size()) != n)
      throw DimensionError("transient problem: inconsistent vector sizes");
    for (Index i = 0; i < n; ++i)
      if (boundary_mask[i] && std::abs(initial[i] - boundary_values[i]) > 1e-12 * (1.0 + std::abs(boundary_values[i])))
        throw ConfigError("transient problem: T0 does not satisfy the boundary data");
  }
};

/// T0 = Gaussian bump, g = T0 on the boundary, f = scale * k_perp * Laplacian(T0).
inline TransientProblem make_problem(const Grids& g, const FieldSpec& spec, double tau, int steps, const GaussianBump& bump = {}, double source_scale = 1.0)
{
  bump.validate();
  TransientProblem p;
  p.tau = tau;
  p.steps = steps;
  p.initial = interpolate(g.dofs, [&](Point x) { return bump.value(x); });
  p.boundary_mask = g.dofs.boundary;
  p.boundary_values = Vector::Zero(g.dofs.size());
  for (int i = 0; i < g.dofs.size(); ++i)
    if (p.boundary_mask[i]) p.boundary_values[i] = p.initial[i];
  const double c = source_scale * spec.k_perp;
  p.source = c == 0.0 ? Vector(Vector::Zero(g.dofs.size())) : assemble_source(g, [&](Point x) { return c * bump.laplacian(x); });
  return p;
}

/// Q = M / tau + A.
inline SparseMatrix time_step_operator(const SparseMatrix& mass, const SparseMatrix& stiffness, double tau)
{
  SparseMatrix Q = (1.0 / tau) * mass + stiffness;
  Q.makeCompressed();
  return Q;
}

/// One implicit step: solves Q T = M T_prev / tau + F with boundary data lifted.
/// solve(rhs, initial_guess) returns the solution of Q.matrix x = rhs.
template <class LinearSolve>
Vector backward_euler_step(const DirichletSystem& Q, const SparseMatrix& mass, const Vector& source, const Vector& prev, double tau, LinearSolve&& solve)
{
  const Vector rhs = (1.0 / tau) * (mass * prev) + source;
  return solve(Q.lift(rhs), prev);
}

/// States T^0 .. T^steps.
using Trajectory = std::vector<Vector>;

template <class LinearSolve>
Trajectory fine_transient_solve(const TransientProblem& p, const SparseMatrix& mass, const DirichletSystem& Q, LinearSolve&& solve)
{
  p.validate();
  Trajectory traj;
  traj.reserve(p.steps + 1);
  traj.push_back(p.initial);
  for (int n = 1; n <= p.steps; ++n) traj.push_back(backward_euler_step(Q, mass, p.source, traj.back(), p.tau, solve));
  return traj;
}

} // namespace anisomg
