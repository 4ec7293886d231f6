#pragma once

/** @file msbasis.hh
    @brief Spectral multiscale basis: local generalized eigenproblems
    A^w phi = lambda D^w phi with D^w = diag(A^w), partition-of-unity blending,
    the prolongation P and Galerkin coarse operators.
*/

#include "anisomg/fem.hh"
#include "anisomg/field.hh"
#include "anisomg/linalg.hh"
#include "anisomg/mesh.hh"
#include "anisomg/types.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace anisomg {

struct LocalOperator {
  SparseMatrix A; ///< Neumann stiffness over the subdomain triangles
  Vector D;       ///< diag(A)
};

/// Wraps a local Neumann matrix; rejects a non-positive diagonal entry.
inline LocalOperator local_operator(SparseMatrix A)
{
  LocalOperator op;
  op.D = A.diagonal();
  for (Index i = 0; i < op.D.size(); ++i)
    if (!(op.D[i] > 0.0)) throw SolverError("local_operator: non-positive diagonal entry at local dof " + std::to_string(i));
  op.A = std::move(A);
  return op;
}

/// Re-assembles the stiffness over the elements of the subdomain with natural boundary conditions.
inline LocalOperator local_operator(const Grids& g, const FieldSpec& spec, const Subdomain& sub)
{
  return local_operator(assemble_local_stiffness(g, spec, sub));
}

struct EigOptions {
  int max_dense = 4000;
  double eps_factor = 1e-8; ///< eps_lambda = eps_factor * lambda_max(D^-1 A)

  void validate() const
  {
    if (max_dense < 1) throw ConfigError("eig: max_dense must be >= 1");
    if (!(eps_factor >= 0.0)) throw ConfigError("eig: eps_factor must be >= 0");
  }
};

struct LocalSpectralResult {
  int index = 0;
  int J = 0;            ///< number of selected basis vectors
  Vector eigenvalues;   ///< ascending; holds J+1 values when the local dimension allows
  DenseMatrix vectors;  ///< D-orthonormal columns matching eigenvalues
  Vector D;
  double lambda_max = 0.0;
  double eps_lambda = 0.0;
  bool constant_replaced = false;

  int size() const { return int(D.size()); }
  auto basis() const { return vectors.leftCols(J); }
  /// lambda_{J+1}, or +inf when the whole local space is selected.
  double lambda_next() const { return eigenvalues.size() > J ? eigenvalues[J] : std::numeric_limits<double>::infinity(); }
};

/// Smallest eigenpairs of A phi = lambda D phi through the standard form D^-1/2 A D^-1/2.
/// Computes J+1 pairs when possible so lambda_{J+1} is available. Eigenvalues are refined to
/// the Rayleigh quotients of the returned vectors.
inline LocalSpectralResult solve_local_eig(const SparseMatrix& A, const Vector& D, int J, const EigOptions& opt = {}, int index = 0)
{
  opt.validate();
  const int n = int(D.size());
  if (A.rows() != n || A.cols() != n) throw DimensionError("solve_local_eig: A and D sizes differ");
  if (J < 1 || J > n) throw ConfigError("solve_local_eig: J = " + std::to_string(J) + " outside [1, " + std::to_string(n) + "]");
  if (n > opt.max_dense) throw DimensionError("solve_local_eig: local dimension " + std::to_string(n) + " exceeds dense limit " + std::to_string(opt.max_dense));
  for (int i = 0; i < n; ++i)
    if (!(D[i] > 0.0)) throw SolverError("solve_local_eig: D must be positive");

  const Vector s = D.cwiseSqrt().cwiseInverse();
  DenseMatrix S = s.asDiagonal() * DenseMatrix(A) * s.asDiagonal();
  const int count = std::min(J + 1, n);
  PartialEigen pe = symmetric_eigen_smallest(std::move(S), count);

  LocalSpectralResult r;
  r.index = index;
  r.J = J;
  r.D = D;
  r.lambda_max = pe.lambda_max;
  r.eps_lambda = opt.eps_factor * pe.lambda_max;
  r.vectors = s.asDiagonal() * pe.vectors;

  if (pe.values[0] < r.eps_lambda) {
    r.constant_replaced = true;
    r.vectors.col(0).setConstant(1.0 / std::sqrt(D.sum()));
  }
  // D-weighted modified Gram-Schmidt, two passes.
  for (int pass = 0; pass < 2; ++pass)
    for (int j = 0; j < count; ++j) {
      for (int k = 0; k < j; ++k) r.vectors.col(j) -= (r.vectors.col(k).dot(D.asDiagonal() * r.vectors.col(j))) * r.vectors.col(k);
      r.vectors.col(j) /= std::sqrt(r.vectors.col(j).dot(D.asDiagonal() * r.vectors.col(j)));
    }

  r.eigenvalues.resize(count);
  const DenseMatrix AV = A * r.vectors;
  for (int j = 0; j < count; ++j) r.eigenvalues[j] = r.vectors.col(j).dot(AV.col(j)) / r.vectors.col(j).dot(D.asDiagonal() * r.vectors.col(j));
  if (r.constant_replaced) r.eigenvalues[0] = std::max(0.0, r.eigenvalues[0]);

  // Keep the constant first; order the rest stably by the refined values.
  std::vector<int> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin() + 1, perm.end(), [&](int a, int b) { return r.eigenvalues[a] < r.eigenvalues[b]; });
  Vector vals(count);
  DenseMatrix vecs(n, count);
  for (int j = 0; j < count; ++j) {
    vals[j] = r.eigenvalues[perm[j]];
    vecs.col(j) = r.vectors.col(perm[j]);
  }
  r.eigenvalues = std::move(vals);
  r.vectors = std::move(vecs);
  return r;
}

struct Prolongation {
  SparseMatrix P;                                ///< N_h x DOF_H
  std::vector<std::pair<int, int>> columns;      ///< (subdomain, local basis index) per column
  std::vector<int> offsets;                      ///< first column of each subdomain

  int dof_H() const { return int(P.cols()); }
};

/// Column (i, j) = chi_i * phi_j^{w_i} scattered to global dofs.
inline Prolongation assemble_prolongation(const std::vector<LocalSpectralResult>& results, const std::vector<Subdomain>& subs, const CoarseGrid& cg,
                                          const DofMap& dm)
{
  if (results.size() != subs.size()) throw DimensionError("assemble_prolongation: one result per subdomain required");
  Prolongation pr;
  pr.offsets.resize(subs.size() + 1, 0);
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (results[i].J < 1) throw ConfigError("assemble_prolongation: every subdomain needs J >= 1");
    if (results[i].size() != subs[i].size()) throw DimensionError("assemble_prolongation: result size does not match subdomain");
    pr.offsets[i + 1] = pr.offsets[i] + results[i].J;
  }
  std::vector<Triplet> trips;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const Vector chi = partition_of_unity_weights(cg, dm, subs[i]);
    for (int j = 0; j < results[i].J; ++j) {
      pr.columns.emplace_back(int(i), j);
      const int col = pr.offsets[i] + j;
      for (int l = 0; l < subs[i].size(); ++l) {
        const double v = chi[l] * results[i].vectors(l, j);
        if (v != 0.0) trips.emplace_back(subs[i].dofs[l], col, v);
      }
    }
  }
  pr.P.resize(dm.size(), pr.offsets.back());
  pr.P.setFromTriplets(trips.begin(), trips.end());
  pr.P.makeCompressed();
  return pr;
}

/// Copy of P with the rows of masked (boundary) dofs removed from the sparsity pattern.
inline SparseMatrix zero_rows(const SparseMatrix& P, const std::vector<char>& mask)
{
  if (Index(mask.size()) != P.rows()) throw DimensionError("zero_rows: mask size mismatch");
  SparseMatrix out = P;
  out.prune([&](Index row, Index, double) { return !mask[row]; });
  out.makeCompressed();
  return out;
}

/// P^T X P with exact symmetry enforced.
inline SparseMatrix galerkin(const SparseMatrix& P, const SparseMatrix& X)
{
  if (X.rows() != P.rows() || X.cols() != P.rows()) throw DimensionError("galerkin: dimension mismatch");
  const SparseMatrix Pt = P.transpose();
  SparseMatrix XP = X * P;
  SparseMatrix C = Pt * XP;
  return symmetrized(C);
}

struct CoarseSystem {
  SparseMatrix M;
  SparseMatrix A;
  Vector F;
};

inline CoarseSystem galerkin_project(const SparseMatrix& P, const SparseMatrix& M, const SparseMatrix& A, const Vector& F)
{
  if (F.size() != P.rows()) throw DimensionError("galerkin_project: F size mismatch");
  return {galerkin(P, M), galerkin(P, A), P.transpose() * F};
}

struct SpectralBasis {
  std::vector<Subdomain> subdomains;
  std::vector<LocalSpectralResult> local;
  Prolongation prolongation;
  int J = 0;

  const SparseMatrix& P() const { return prolongation.P; }
  int dof_H() const { return prolongation.dof_H(); }
};

/// Solves all local problems (ordered by subdomain index) and assembles P.
inline SpectralBasis build_spectral_basis(const Grids& g, const FieldSpec& spec, int J, const EigOptions& opt = {})
{
  spec.validate();
  SpectralBasis sb;
  sb.J = J;
  sb.subdomains = subdomains(g);
  sb.local.reserve(sb.subdomains.size());
  for (const Subdomain& s : sb.subdomains) {
    const LocalOperator op = local_operator(g, spec, s);
    sb.local.push_back(solve_local_eig(op.A, op.D, std::min(J, s.size()), opt, s.index));
  }
  sb.prolongation = assemble_prolongation(sb.local, sb.subdomains, g.coarse, g.dofs);
  return sb;
}

/// The same local eigenpairs with only the first J selected, P reassembled.
inline SpectralBasis restrict_basis(const SpectralBasis& sb, int J, const Grids& g)
{
  if (J < 1 || J > sb.J) throw ConfigError("restrict_basis: J must lie in [1, " + std::to_string(sb.J) + "]");
  SpectralBasis out;
  out.J = J;
  out.subdomains = sb.subdomains;
  out.local = sb.local;
  for (auto& r : out.local) {
    const int n = r.size();
    r.J = std::min(J, n);
    const int keep = std::min<int>(r.J + 1, int(r.eigenvalues.size()));
    r.eigenvalues.conservativeResize(keep);
    r.vectors.conservativeResize(Eigen::NoChange, keep);
  }
  out.prolongation = assemble_prolongation(out.local, out.subdomains, g.coarse, g.dofs);
  return out;
}

/// lambda_{J+1} = min over coarse cells K of min over the subdomains of K's vertices.
inline double lambda_next_global(const CoarseGrid& cg, const std::vector<LocalSpectralResult>& local)
{
  double lam = std::numeric_limits<double>::infinity();
  for (int c = 0; c < cg.num_cells(); ++c) {
    double lk = std::numeric_limits<double>::infinity();
    for (int v : cg.cell_vertices(c)) lk = std::min(lk, local[v].lambda_next());
    lam = std::min(lam, lk);
  }
  return lam;
}

} // namespace anisomg
