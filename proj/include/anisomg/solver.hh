#pragma once

/** @file solver.hh
    @brief Relaxation smoothers, coarse and fine direct solvers, the two-grid
    preconditioner, preconditioned conjugate gradients and the multiscale
    (reduced-order) time stepper.
*/

#include "anisomg/fem.hh"
#include "anisomg/msbasis.hh"
#include "anisomg/types.hh"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <chrono>
#include <limits>
#include <memory>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace anisomg {

enum class SmootherKind { Jacobi, SymmetricGaussSeidel, GaussSeidel };

inline std::string to_string(SmootherKind k)
{
  switch (k) {
  case SmootherKind::Jacobi: return "jacobi";
  case SmootherKind::SymmetricGaussSeidel: return "sgs";
  case SmootherKind::GaussSeidel: return "gs";
  }
  return "?";
}

inline SmootherKind smoother_kind_from_string(const std::string& s)
{
  if (s == "jacobi") return SmootherKind::Jacobi;
  if (s == "sgs") return SmootherKind::SymmetricGaussSeidel;
  if (s == "gs") return SmootherKind::GaussSeidel;
  throw ConfigError("unknown smoother '" + s + "' (expected jacobi, sgs or gs)");
}

/// One application is nu sweeps of the update x += S^-1 (b - Q x).
///   jacobi  S = D / omega
///   sgs     one sweep = forward then backward Gauss-Seidel (S symmetric)
///   gs      S = D + L (forward); its transpose is the backward sweep
struct Smoother {
  SmootherKind kind = SmootherKind::SymmetricGaussSeidel;
  int nu = 5;
  double omega = 2.0 / 3.0;

  void validate() const
  {
    if (nu < 1) throw ConfigError("smoother: nu must be >= 1");
    if (!(omega > 0.0 && omega <= 1.0)) throw ConfigError("smoother: omega must lie in (0, 1]");
  }
};

namespace detail {

inline Vector checked_diagonal(const SparseMatrix& Q)
{
  Vector d = Q.diagonal();
  for (Index i = 0; i < d.size(); ++i)
    if (d[i] == 0.0) throw SolverError("smoother: zero diagonal entry at row " + std::to_string(i));
  return d;
}

inline void gs_forward(const SparseMatrix& Q, const Vector& d, const Vector& b, Vector& x)
{
  for (Index i = 0; i < Q.rows(); ++i) {
    double s = b[i];
    for (SparseMatrix::InnerIterator it(Q, i); it; ++it)
      if (it.col() != i) s -= it.value() * x[it.col()];
    x[i] = s / d[i];
  }
}

inline void gs_backward(const SparseMatrix& Q, const Vector& d, const Vector& b, Vector& x)
{
  for (Index i = Q.rows() - 1; i >= 0; --i) {
    double s = b[i];
    for (SparseMatrix::InnerIterator it(Q, i); it; ++it)
      if (it.col() != i) s -= it.value() * x[it.col()];
    x[i] = s / d[i];
  }
}

} // namespace detail

/// nu smoothing sweeps on Q x = b from x; transposed = true applies S^T instead of S.
inline void smooth_inplace(const Smoother& sm, const SparseMatrix& Q, const Vector& diag, const Vector& b, Vector& x, bool transposed = false)
{
  for (int k = 0; k < sm.nu; ++k) {
    switch (sm.kind) {
    case SmootherKind::Jacobi: x += sm.omega * (b - Q * x).cwiseQuotient(diag); break;
    case SmootherKind::SymmetricGaussSeidel:
      detail::gs_forward(Q, diag, b, x);
      detail::gs_backward(Q, diag, b, x);
      break;
    case SmootherKind::GaussSeidel:
      if (transposed) detail::gs_backward(Q, diag, b, x);
      else detail::gs_forward(Q, diag, b, x);
      break;
    }
  }
}

inline Vector smooth(const Smoother& sm, const SparseMatrix& Q, const Vector& b, const Vector& x0, bool transposed = false)
{
  sm.validate();
  if (Q.rows() != Q.cols() || b.size() != Q.rows() || x0.size() != Q.rows()) throw DimensionError("smooth: size mismatch");
  Vector x = x0;
  smooth_inplace(sm, Q, detail::checked_diagonal(Q), b, x, transposed);
  return x;
}

/// Factorizes once and solves repeatedly. Sparse LU by default; a dense pivoted LDL^T with
/// thresholded pivots serves singular positive semidefinite systems with consistent right-hand sides.
class CoarseSolver {
public:
  struct Options {
    double pivot_tolerance = 1e-12; ///< relative to the largest pivot in the dense path
    bool force_dense = false;
    int max_dense = 6000;
  };

  CoarseSolver() = default;
  explicit CoarseSolver(const SparseMatrix& Q, Options opt) { factorize(Q, opt); }
  explicit CoarseSolver(const SparseMatrix& Q) { factorize(Q, Options{}); }

  void factorize(const SparseMatrix& Q, Options opt)
  {
    if (Q.rows() != Q.cols()) throw DimensionError("CoarseSolver: matrix not square");
    n_ = Q.rows();
    ++factorizations_;
    dense_ = opt.force_dense;
    if (!dense_) {
      lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
      Eigen::SparseMatrix<double> C = Q;
      C.makeCompressed();
      lu_->compute(C);
      if (lu_->info() != Eigen::Success) {
        lu_.reset();
        dense_ = true;
      }
    }
    if (dense_) {
      if (n_ > opt.max_dense) throw SolverError("CoarseSolver: singular coarse matrix of size " + std::to_string(n_) + " exceeds the dense fallback limit");
      ldlt_ = std::make_unique<Eigen::LDLT<DenseMatrix>>(DenseMatrix(Q));
      if (ldlt_->info() != Eigen::Success) throw SolverError("CoarseSolver: dense LDLT failed");
      const Vector d = ldlt_->vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      dinv_ = Vector::Zero(n_);
      rank_ = 0;
      for (Index i = 0; i < n_; ++i)
        if (std::abs(d[i]) > opt.pivot_tolerance * dmax) {
          dinv_[i] = 1.0 / d[i];
          ++rank_;
        }
    } else {
      rank_ = n_;
    }
  }

  Vector solve(const Vector& b) const
  {
    if (b.size() != n_) throw DimensionError("CoarseSolver::solve: size mismatch");
    if (lu_) {
      Vector x = lu_->solve(b);
      if (!x.allFinite()) throw SolverError("CoarseSolver: non-finite solution");
      return x;
    }
    if (!ldlt_) throw SolverError("CoarseSolver: not factorized");
    Vector y = ldlt_->transpositionsP() * b;
    ldlt_->matrixL().solveInPlace(y);
    y = y.cwiseProduct(dinv_);
    ldlt_->matrixU().solveInPlace(y);
    return ldlt_->transpositionsP().transpose() * y;
  }

  Index size() const { return n_; }
  Index rank() const { return rank_; }
  bool dense() const { return dense_; }
  int factorizations() const { return factorizations_; }

private:
  Index n_ = 0;
  Index rank_ = 0;
  bool dense_ = false;
  int factorizations_ = 0;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
  std::shared_ptr<Eigen::LDLT<DenseMatrix>> ldlt_;
  Vector dinv_;
};

/// Solves Q_H T_H = rhs_H.
inline Vector coarse_direct_solve(const SparseMatrix& QH, const Vector& rhs)
{
  return CoarseSolver(QH).solve(rhs);
}

/// Sparse Cholesky for the SPD fine operator.
class FineDirectSolver {
public:
  explicit FineDirectSolver(const SparseMatrix& Q)
  {
    Eigen::SparseMatrix<double> C = Q;
    ldlt_.compute(C);
    if (ldlt_.info() != Eigen::Success) throw SolverError("FineDirectSolver: factorization failed");
  }

  Vector solve(const Vector& b) const
  {
    Vector x = ldlt_.solve(b);
    if (!x.allFinite()) throw SolverError("FineDirectSolver: non-finite solution");
    return x;
  }

private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

struct IdentityPreconditioner {
  Vector operator()(const Vector& r) const { return r; }
};

/// z = C_TG^-1 r: pre-smooth with S, coarse correction through P, post-smooth with S^T.
class TwoGridPreconditioner {
public:
  TwoGridPreconditioner(const SparseMatrix& Q, SparseMatrix P, std::optional<Smoother> smoother, CoarseSolver::Options copt = {})
      : Q_(&Q), P_(std::move(P)), smoother_(std::move(smoother))
  {
    if (P_.rows() != Q.rows()) throw DimensionError("TwoGridPreconditioner: P rows must match Q");
    if (smoother_) {
      smoother_->validate();
      diag_ = detail::checked_diagonal(Q);
    }
    Pt_ = P_.transpose();
    QH_ = galerkin(P_, Q);
    coarse_.factorize(QH_, copt);
  }

  Vector apply(const Vector& r) const
  {
    if (r.size() != Q_->rows()) throw DimensionError("TwoGridPreconditioner::apply: size mismatch");
    Vector y = Vector::Zero(r.size());
    if (smoother_) smooth_inplace(*smoother_, *Q_, diag_, r, y, false);
    const Vector res = smoother_ ? Vector(r - *Q_ * y) : r;
    y += P_ * coarse_.solve(Pt_ * res);
    if (smoother_) smooth_inplace(*smoother_, *Q_, diag_, r, y, true);
    return y;
  }

  Vector operator()(const Vector& r) const { return apply(r); }

  const SparseMatrix& coarse_matrix() const { return QH_; }
  const SparseMatrix& prolongation() const { return P_; }
  const CoarseSolver& coarse_solver() const { return coarse_; }
  const std::optional<Smoother>& smoother() const { return smoother_; }

private:
  const SparseMatrix* Q_;
  SparseMatrix P_;
  SparseMatrix Pt_;
  SparseMatrix QH_;
  std::optional<Smoother> smoother_;
  Vector diag_;
  CoarseSolver coarse_;
};

struct PcgResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  double rel_residual = 0.0;
  std::vector<double> history; ///< relative residual after each iteration, starting with the initial one
};

/// Preconditioned CG; stops when ||b - Q x||_2 <= rtol ||b||_2. Hitting maxiter is reported, not thrown.
template <class Precond>
PcgResult pcg(const SparseMatrix& Q, const Vector& b, Precond&& M, double rtol, int maxiter, const Vector& x0)
{
  if (Q.rows() != Q.cols() || b.size() != Q.rows() || x0.size() != Q.rows()) throw DimensionError("pcg: size mismatch");
  if (!(rtol > 0.0)) throw ConfigError("pcg: rtol must be > 0");
  if (maxiter < 0) throw ConfigError("pcg: maxiter must be >= 0");
  PcgResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x = Vector::Zero(b.size());
    res.converged = true;
    res.history.push_back(0.0);
    return res;
  }
  Vector x = x0;
  Vector r = b - Q * x;
  double rel = r.norm() / bnorm;
  res.history.push_back(rel);
  Vector z = M(r);
  Vector p = z;
  double rz = r.dot(z);
  int k = 0;
  while (rel > rtol && k < maxiter) {
    if (!(rz > 0.0)) throw IndefiniteError("pcg: preconditioner is not positive definite (r^T z = " + std::to_string(rz) + ")");
    const Vector Qp = Q * p;
    const double pQp = p.dot(Qp);
    if (!(pQp > 0.0)) throw IndefiniteError("pcg: operator is not positive definite (p^T Q p = " + std::to_string(pQp) + ")");
    const double alpha = rz / pQp;
    x += alpha * p;
    r -= alpha * Qp;
    ++k;
    rel = r.norm() / bnorm;
    if (rel <= rtol) {
      r = b - Q * x;
      rel = r.norm() / bnorm;
      if (rel > rtol) {
        res.history.push_back(rel);
        z = M(r);
        p = z;
        rz = r.dot(z);
        continue;
      }
    }
    res.history.push_back(rel);
    if (rel <= rtol) break;
    z = M(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  res.x = std::move(x);
  res.iterations = k;
  res.rel_residual = rel;
  res.converged = rel <= rtol;
  return res;
}

struct StepRecord {
  int iterations = 0;
  bool converged = true;
  double rel_residual = 0.0;
  double seconds = 0.0;
  std::vector<double> history;
};

struct SolveReport {
  std::vector<StepRecord> steps;
  double setup_seconds = 0.0;  ///< factorization / preconditioner construction
  double online_seconds = 0.0; ///< time stepping only

  int total_iterations() const
  {
    int s = 0;
    for (const auto& st : steps) s += st.iterations;
    return s;
  }
  double average_iterations() const { return steps.empty() ? 0.0 : double(total_iterations()) / double(steps.size()); }
  bool nc() const
  {
    for (const auto& st : steps)
      if (!st.converged) return true;
    return false;
  }
  double final_rel_residual() const { return steps.empty() ? 0.0 : steps.back().rel_residual; }
};

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
} // namespace detail

enum class LinearSolverKind { Direct, Pcg };

struct FineSolveOptions {
  LinearSolverKind linear = LinearSolverKind::Direct;
  bool two_grid = true;                 ///< PCG preconditioner: two-grid or identity
  std::optional<Smoother> smoother = Smoother{};
  double rtol = 1e-5;
  int maxiter = 100;
  CoarseSolver::Options coarse;
};

struct FineRun {
  Trajectory states;
  SolveReport report;
};

/// Backward-Euler run on the fine grid. P is required for two-grid PCG and ignored otherwise.
inline FineRun fine_transient_solve(const TransientProblem& prob, const SparseMatrix& mass, const SparseMatrix& stiffness, const FineSolveOptions& opt,
                                    const SparseMatrix* P = nullptr)
{
  prob.validate();
  const auto t_setup = std::chrono::steady_clock::now();
  const DirichletSystem Q = eliminate_dirichlet(time_step_operator(mass, stiffness, prob.tau), prob.boundary_mask, prob.boundary_values);
  FineRun run;
  std::optional<FineDirectSolver> direct;
  std::optional<TwoGridPreconditioner> tg;
  if (opt.linear == LinearSolverKind::Direct) direct.emplace(Q.matrix);
  else if (opt.two_grid) {
    if (!P) throw ConfigError("fine_transient_solve: two-grid PCG needs a prolongation");
    tg.emplace(Q.matrix, zero_rows(*P, prob.boundary_mask), opt.smoother, opt.coarse);
  }
  run.report.setup_seconds = detail::seconds_since(t_setup);

  const auto t_online = std::chrono::steady_clock::now();
  const auto solve = [&](const Vector& rhs, const Vector& guess) -> Vector {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    Vector x;
    if (direct) {
      x = direct->solve(rhs);
      rec.rel_residual = (rhs - Q.matrix * x).norm() / std::max(rhs.norm(), std::numeric_limits<double>::min());
    } else {
      PcgResult pr = tg ? pcg(Q.matrix, rhs, *tg, opt.rtol, opt.maxiter, guess) : pcg(Q.matrix, rhs, IdentityPreconditioner{}, opt.rtol, opt.maxiter, guess);
      rec.iterations = pr.iterations;
      rec.converged = pr.converged;
      rec.rel_residual = pr.rel_residual;
      rec.history = std::move(pr.history);
      x = std::move(pr.x);
    }
    rec.seconds = detail::seconds_since(t0);
    run.report.steps.push_back(std::move(rec));
    return x;
  };
  run.states = fine_transient_solve(prob, mass, Q, solve);
  run.report.online_seconds = detail::seconds_since(t_online);
  return run;
}

struct MultiscaleRun {
  Trajectory states;        ///< reconstructed T_ms^n = G + P_0 T_H^n
  std::vector<Vector> coarse; ///< T_H^n
  SolveReport report;
};

/// Reduced-order backward Euler in range(P_0), P_0 = P with boundary rows removed, lifted by the boundary data G.
/// T_H^0 is the mass projection of T0 - G.
inline MultiscaleRun multiscale_transient_solve(const TransientProblem& prob, const SparseMatrix& mass, const SparseMatrix& stiffness, const SparseMatrix& P,
                                                CoarseSolver::Options copt = {})
{
  prob.validate();
  if (P.rows() != prob.initial.size()) throw DimensionError("multiscale_transient_solve: P rows must match the fine dimension");
  const auto t_setup = std::chrono::steady_clock::now();
  const SparseMatrix P0 = zero_rows(P, prob.boundary_mask);
  const SparseMatrix P0t = P0.transpose();
  const SparseMatrix Q = time_step_operator(mass, stiffness, prob.tau);
  const Vector& G = prob.boundary_values;
  Vector Gm = Vector::Zero(G.size());
  for (Index i = 0; i < G.size(); ++i)
    if (prob.boundary_mask[i]) Gm[i] = G[i];
  const SparseMatrix QH = galerkin(P0, Q);
  const CoarseSolver coarse(QH, copt);
  const Vector lift = P0t * (prob.source - Q * Gm);

  MultiscaleRun run;
  {
    const SparseMatrix MH = galerkin(P0, mass);
    const CoarseSolver mproj(MH, copt);
    run.coarse.push_back(mproj.solve(P0t * (mass * (prob.initial - Gm))));
  }
  run.report.setup_seconds = detail::seconds_since(t_setup);

  const auto t_online = std::chrono::steady_clock::now();
  run.states.push_back(Gm + P0 * run.coarse.back());
  for (int n = 1; n <= prob.steps; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    const Vector rhs = P0t * ((1.0 / prob.tau) * (mass * run.states.back())) + lift;
    run.coarse.push_back(coarse.solve(rhs));
    run.states.push_back(Gm + P0 * run.coarse.back());
    StepRecord rec;
    rec.rel_residual = (rhs - QH * run.coarse.back()).norm() / std::max(rhs.norm(), std::numeric_limits<double>::min());
    rec.seconds = detail::seconds_since(t0);
    run.report.steps.push_back(std::move(rec));
  }
  run.report.online_seconds = detail::seconds_since(t_online);
  return run;
}

} // namespace anisomg
