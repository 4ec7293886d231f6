#pragma once

/** @file linalg.hh
    @brief Dense symmetric eigensolvers backed by LAPACK.

    Partial spectra use Householder tridiagonalization followed by MRRR on the
    tridiagonal matrix, so only the requested eigenvectors are formed.
*/

#include "anisomg/types.hh"

#include <lapacke.h>

#include <algorithm>
#include <string>
#include <vector>

namespace anisomg {

struct PartialEigen {
  Vector values;       ///< ascending
  DenseMatrix vectors; ///< orthonormal columns
  double lambda_max = 0.0;
};

/// The `count` smallest eigenpairs of the symmetric matrix S (lower triangle read) and its largest eigenvalue.
inline PartialEigen symmetric_eigen_smallest(DenseMatrix S, int count)
{
  const lapack_int n = lapack_int(S.rows());
  if (S.cols() != n) throw DimensionError("symmetric_eigen_smallest: matrix not square");
  if (count < 1 || count > n) throw DimensionError("symmetric_eigen_smallest: count " + std::to_string(count) + " outside [1, " + std::to_string(n) + "]");

  std::vector<double> d(n), e(std::max<lapack_int>(n, 1)), tau(std::max<lapack_int>(n - 1, 1));
  lapack_int info = LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', n, S.data(), n, d.data(), e.data(), tau.data());
  if (info != 0) throw SolverError("dsytrd failed with info " + std::to_string(info));

  PartialEigen out;
  {
    std::vector<double> dd = d, ee = e, w(n);
    std::vector<lapack_int> iblock(n), isplit(n);
    lapack_int m = 0, nsplit = 0;
    info = LAPACKE_dstebz('I', 'E', n, 0.0, 0.0, n, n, 0.0, dd.data(), ee.data(), &m, &nsplit, w.data(), iblock.data(), isplit.data());
    if (info != 0 || m != 1) throw SolverError("dstebz failed with info " + std::to_string(info));
    out.lambda_max = w[0];
  }

  std::vector<double> dd = d, ee = e, w(n);
  out.vectors.resize(n, count);
  std::vector<lapack_int> isuppz(2 * std::size_t(count));
  lapack_int m = 0;
  lapack_logical tryrac = 1;
  info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', n, dd.data(), ee.data(), 0.0, 0.0, 1, count, &m, w.data(), out.vectors.data(), n, count,
                        isuppz.data(), &tryrac);
  if (info != 0 || m != count) throw SolverError("dstemr failed with info " + std::to_string(info));
  if (n > 1) {
    info = LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'L', 'N', n, count, S.data(), n, tau.data(), out.vectors.data(), n);
    if (info != 0) throw SolverError("dormtr failed with info " + std::to_string(info));
  }
  out.values = Eigen::Map<Vector>(w.data(), count);
  return out;
}

/// All eigenvalues of a symmetric matrix, ascending.
inline Vector symmetric_eigenvalues(DenseMatrix S)
{
  const lapack_int n = lapack_int(S.rows());
  if (S.cols() != n) throw DimensionError("symmetric_eigenvalues: matrix not square");
  Vector w(n);
  if (n == 0) return w;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, S.data(), n, w.data());
  if (info != 0) throw SolverError("dsyevd failed with info " + std::to_string(info));
  return w;
}

/// Eigenvalues mu of X v = mu Q v for symmetric X and SPD Q, ascending.
inline Vector generalized_eigenvalues(const DenseMatrix& X, const DenseMatrix& Q)
{
  Eigen::LLT<DenseMatrix> llt(Q);
  if (llt.info() != Eigen::Success) throw SolverError("generalized_eigenvalues: Q is not positive definite");
  const DenseMatrix L = llt.matrixL();
  DenseMatrix Y = L.triangularView<Eigen::Lower>().solve(X);
  DenseMatrix Z = L.triangularView<Eigen::Lower>().solve(Y.transpose());
  Z = 0.5 * (Z + Z.transpose()).eval();
  return symmetric_eigenvalues(std::move(Z));
}

} // namespace anisomg
