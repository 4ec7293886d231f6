#pragma once

/** @file types.hh
    @brief Common linear-algebra aliases, geometric primitives and error types.
*/

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisomg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
/// All assembled operators are stored row-major so relaxation sweeps walk rows directly.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad counts, unknown keys, malformed values.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A dense check or dense eigensolve was requested on a problem that is too large.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Factorization, eigensolver or iterative-solver failure.
class SolverError : public Error {
public:
  using Error::Error;
};

/// PCG found p^T Q p <= 0: the operator or the preconditioner is not SPD.
class IndefiniteError : public SolverError {
public:
  using SolverError::SolverError;
};

} // namespace anisomg
