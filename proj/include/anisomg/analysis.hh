#pragma once

/** @file analysis.hh
    @brief Norms, local and global spectral projections, numerical checks of the
    approximation estimates and of the two-grid convergence theory, and error metrics.
*/

#include "anisomg/linalg.hh"
#include "anisomg/mesh.hh"
#include "anisomg/msbasis.hh"
#include "anisomg/solver.hh"
#include "anisomg/types.hh"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace anisomg {

/// M, A, D = diag(A), Q = M / tau + A.
struct NormContext {
  SparseMatrix M;
  SparseMatrix A;
  Vector D;
  SparseMatrix Q;
  double tau = 1.0;

  NormContext() = default;
  NormContext(SparseMatrix mass, SparseMatrix stiffness, double tau_) : M(std::move(mass)), A(std::move(stiffness)), tau(tau_)
  {
    if (!(tau > 0.0)) throw ConfigError("NormContext: tau must be > 0");
    D = A.diagonal();
    for (Index i = 0; i < D.size(); ++i)
      if (!(D[i] > 0.0)) throw SolverError("NormContext: diag(A) must be positive");
    Q = time_step_operator(M, A, tau);
  }

  double sq_M(const Vector& v) const { return v.dot(M * v); }
  double sq_A(const Vector& v) const { return v.dot(A * v); }
  double sq_D(const Vector& v) const { return v.dot(D.cwiseProduct(v)); }
  double sq_Q(const Vector& v) const { return v.dot(Q * v); }
  /// ||B v||_D^2 with B = D^-1 A, evaluated as (A v)^T D^-1 (A v).
  double sq_B(const Vector& v) const
  {
    const Vector Av = A * v;
    return Av.dot(Av.cwiseQuotient(D));
  }
  /// The same quantity evaluated as (B v)^T D (B v).
  double sq_B_direct(const Vector& v) const
  {
    const Vector Bv = (A * v).cwiseQuotient(D);
    return Bv.dot(D.cwiseProduct(Bv));
  }
};

struct InequalityCheck {
  std::string name;
  int subject = -1; ///< subdomain or sample id
  double lhs = 0.0;
  double rhs = 0.0;

  bool pass() const { return lhs <= rhs * (1.0 + 1e-10); }
  /// (rhs - lhs) / rhs; negative when violated.
  double margin() const
  {
    if (rhs == std::numeric_limits<double>::infinity()) return 1.0;
    const double s = std::max(std::abs(rhs), std::numeric_limits<double>::min());
    return (rhs - lhs) / s;
  }
};

struct EstimateReport {
  std::string suite;
  std::vector<InequalityCheck> checks;
  std::map<std::string, double> values;   ///< constants and summary quantities
  std::vector<std::string> failures;      ///< hard failures beyond individual inequality checks
  std::vector<std::string> warnings;

  bool pass() const
  {
    if (!failures.empty()) return false;
    for (const auto& c : checks)
      if (!c.pass()) return false;
    return true;
  }
  int num_failed() const
  {
    int n = 0;
    for (const auto& c : checks) n += c.pass() ? 0 : 1;
    return n;
  }
  double min_margin(const std::string& name = {}) const
  {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : checks)
      if (name.empty() || c.name == name) m = std::min(m, c.margin());
    return m;
  }
  void merge(const EstimateReport& o)
  {
    checks.insert(checks.end(), o.checks.begin(), o.checks.end());
    failures.insert(failures.end(), o.failures.begin(), o.failures.end());
    warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
  }
};

/// Seeded standard-normal vectors.
inline std::vector<Vector> random_vectors(Index n, int count, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Vector> out(count, Vector(n));
  for (auto& v : out)
    for (Index i = 0; i < n; ++i) v[i] = nd(rng);
  return out;
}

/// P^w v = sum_j (v, phi_j)_D phi_j over the selected basis.
inline Vector local_projection(const LocalSpectralResult& r, const Vector& v)
{
  if (v.size() != r.size()) throw DimensionError("local_projection: size mismatch");
  const auto Phi = r.basis();
  return Phi * (Phi.transpose() * r.D.cwiseProduct(v));
}

/// The three local inequalities for each sample vector.
inline EstimateReport check_local_estimates(const LocalSpectralResult& r, const SparseMatrix& A_local, const std::vector<Vector>& samples)
{
  EstimateReport rep;
  rep.suite = "local";
  const double lam = r.lambda_next();
  rep.values["lambda_next"] = lam;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Vector& v = samples[s];
    const Vector e = v - local_projection(r, v);
    const double eD = e.dot(r.D.cwiseProduct(e));
    const double eA = e.dot(A_local * e);
    const double vA = v.dot(A_local * v);
    const Vector Av = A_local * v;
    const double Bv = Av.dot(Av.cwiseQuotient(r.D));
    rep.checks.push_back({"weak", r.index, eD, vA / lam});
    rep.checks.push_back({"strong", r.index, eA, Bv / lam});
    rep.checks.push_back({"fap", r.index, eD, Bv / (lam * lam)});
  }
  return rep;
}

/// Pi = P C with row (i, j) of C equal to (D_i phi_j)^T R_i, so Pi v = sum_i chi_i P^{w_i} v.
class GlobalInterpolation {
public:
  GlobalInterpolation(const SpectralBasis& sb, const SparseMatrix& P) : P_(P)
  {
    if (P.cols() != sb.dof_H()) throw DimensionError("GlobalInterpolation: P columns must match the basis");
    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < sb.subdomains.size(); ++i) {
      const auto& r = sb.local[i];
      const auto& s = sb.subdomains[i];
      for (int j = 0; j < r.J; ++j) {
        const int row = sb.prolongation.offsets[i] + j;
        for (int l = 0; l < s.size(); ++l) trips.emplace_back(row, s.dofs[l], r.D[l] * r.vectors(l, j));
      }
    }
    C_.resize(P.cols(), P.rows());
    C_.setFromTriplets(trips.begin(), trips.end());
    C_.makeCompressed();
  }

  Vector apply(const Vector& v) const
  {
    if (v.size() != P_.rows()) throw DimensionError("GlobalInterpolation::apply: size mismatch");
    return P_ * (C_ * v);
  }

  DenseMatrix dense(int max_dense = 4000) const
  {
    if (P_.rows() > max_dense) throw DimensionError("GlobalInterpolation::dense: dimension exceeds limit");
    return DenseMatrix(P_) * DenseMatrix(C_);
  }

  const SparseMatrix& coefficients() const { return C_; }
  const SparseMatrix& prolongation() const { return P_; }

private:
  SparseMatrix P_;
  SparseMatrix C_;
};

inline Vector global_interpolation(const GlobalInterpolation& pi, const Vector& v) { return pi.apply(v); }

/// Deterministic sample set: constant, x, y, smooth modes, then seeded random vectors.
inline std::vector<Vector> estimate_samples(const DofMap& dm, int random_count, std::uint64_t seed)
{
  constexpr double pi = std::numbers::pi;
  std::vector<Vector> out;
  out.push_back(Vector::Ones(dm.size()));
  out.push_back(interpolate(dm, [](Point p) { return p.x; }));
  out.push_back(interpolate(dm, [](Point p) { return p.y; }));
  for (int k = 1; k <= 3; ++k) out.push_back(interpolate(dm, [&](Point p) { return std::sin(k * pi * p.x) * std::sin(k * pi * p.y); }));
  out.push_back(interpolate(dm, [&](Point p) { return std::cos(2 * pi * p.x) * std::sin(3 * pi * p.y); }));
  auto r = random_vectors(dm.size(), random_count, seed);
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

struct GlobalEstimateOptions {
  double weak_cap = 4.0; ///< the subdomain overlap count bounds the weak constant
  double strong_cap = std::numeric_limits<double>::infinity();
  double fap_cap = std::numeric_limits<double>::infinity();
};

/// Empirical constants c = lhs / (bound without constant) for the three global inequalities.
inline EstimateReport check_global_estimates(const GlobalInterpolation& pi, const NormContext& ctx, double lambda_next, double H,
                                             const std::vector<Vector>& samples, const GlobalEstimateOptions& opt = {})
{
  EstimateReport rep;
  rep.suite = "global";
  const double lam = lambda_next;
  rep.values["lambda_next"] = lam;
  rep.values["H"] = H;
  double cw = 0.0, cs = 0.0, cf = 0.0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Vector& v = samples[s];
    const Vector e = v - pi.apply(v);
    const double eD = ctx.sq_D(e), eA = ctx.sq_A(e), vA = ctx.sq_A(v), vB = ctx.sq_B(v);
    const double floor = 1e-20 * ctx.sq_D(v);
    const auto ratio = [&](double lhs, double base) {
      if (lhs <= floor) return 0.0;
      if (base <= 0.0) return std::numeric_limits<double>::infinity();
      return lhs / base;
    };
    const double w = ratio(eD, vA / lam);
    const double st = ratio(eA, (1.0 / (H * H * lam * lam) + 1.0 / lam) * vB);
    const double f = ratio(eD, vB / (lam * lam));
    cw = std::max(cw, w);
    cs = std::max(cs, st);
    cf = std::max(cf, f);
    rep.checks.push_back({"weak", int(s), w, opt.weak_cap});
    rep.checks.push_back({"strong", int(s), st, opt.strong_cap});
    rep.checks.push_back({"fap", int(s), f, opt.fap_cap});
  }
  rep.values["c_weak"] = cw;
  rep.values["c_strong"] = cs;
  rep.values["c_fap"] = cf;
  for (const auto& [k, c] : std::map<std::string, double>{{"c_weak", cw}, {"c_strong", cs}, {"c_fap", cf}})
    if (!std::isfinite(c)) rep.failures.push_back(k + " is not finite");
  return rep;
}

/// ||a - b||_2 / ||a||_2.
inline double relative_l2_error(const Vector& reference, const Vector& approx)
{
  if (reference.size() != approx.size()) throw DimensionError("relative_l2_error: size mismatch");
  const double n = reference.norm();
  if (n == 0.0) throw Error("relative_l2_error: reference vector is zero");
  return (reference - approx).norm() / n;
}

struct TransientEstimate {
  double lhs = 0.0;
  double rhs = 0.0;
  double initial_error = 0.0; ///< ||T_h^0 - T_ms^0||_M^2
  double ratio() const { return rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0); }
};

/// LHS = ||e^n||_M^2 + tau sum_k ||e^k||_A^2, RHS = ||e^0||_M^2 + tau sum_k (1 / lambda_{J+1}) ||B T_h^k||_D^2.
inline TransientEstimate check_transient_estimate(const Trajectory& fine, const Trajectory& ms, const NormContext& ctx, double lambda_next)
{
  if (fine.size() != ms.size() || fine.empty()) throw DimensionError("check_transient_estimate: trajectories differ in length");
  TransientEstimate t;
  t.initial_error = ctx.sq_M(fine[0] - ms[0]);
  const std::size_t n = fine.size() - 1;
  double sumA = 0.0, sumB = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    sumA += ctx.sq_A(fine[k] - ms[k]);
    sumB += ctx.sq_B(fine[k]);
  }
  t.lhs = ctx.sq_M(fine[n] - ms[n]) + ctx.tau * sumA;
  t.rhs = t.initial_error + ctx.tau * sumB / lambda_next;
  return t;
}

namespace detail {

inline std::vector<int> interior_indices(const std::vector<char>& mask)
{
  std::vector<int> idx;
  for (int i = 0; i < int(mask.size()); ++i)
    if (!mask[i]) idx.push_back(i);
  return idx;
}

inline DenseMatrix dense_block(const SparseMatrix& X, const std::vector<int>& rows, const std::vector<int>& cols)
{
  const DenseMatrix full(X);
  DenseMatrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = full(rows[i], cols[j]);
  return out;
}

} // namespace detail

struct KtgResult {
  double measured = 0.0;
  double bound = 0.0;
  double lambda_next = 0.0;
  double c_hat = 0.0; ///< max_i M_ii / A_ii over interior dofs
  int dimension = 0;
};

/// Largest eigenvalue of (I - Pi)^T D_Q (I - Pi) v = mu Q v on the interior dofs, and the bound
/// 4 (1 + C / tau) / lambda_{J+1}, where 4 is the subdomain overlap count.
inline KtgResult measure_ktg(const NormContext& ctx, const std::vector<char>& mask, const GlobalInterpolation& pi, double lambda_next, int max_dense = 2500)
{
  const std::vector<int> in = detail::interior_indices(mask);
  const int n = int(in.size());
  if (n > max_dense) throw DimensionError("measure_ktg: " + std::to_string(n) + " interior dofs exceed the dense limit " + std::to_string(max_dense));
  if (ctx.Q.rows() > 4 * max_dense) throw DimensionError("measure_ktg: fine dimension too large for dense checks");
  const DenseMatrix Pi = pi.dense(int(ctx.Q.rows()));
  DenseMatrix E(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) E(i, j) = (i == j ? 1.0 : 0.0) - Pi(in[i], in[j]);
  const DenseMatrix QI = detail::dense_block(ctx.Q, in, in);
  Vector dq(n);
  KtgResult k;
  k.dimension = n;
  k.lambda_next = lambda_next;
  for (int i = 0; i < n; ++i) {
    dq[i] = QI(i, i);
    k.c_hat = std::max(k.c_hat, ctx.M.coeff(in[i], in[i]) / ctx.A.coeff(in[i], in[i]));
  }
  const DenseMatrix X = E.transpose() * dq.asDiagonal() * E;
  k.measured = n > 0 ? generalized_eigenvalues(X, QI).maxCoeff() : 0.0;
  k.bound = 4.0 * (1.0 + k.c_hat / ctx.tau) / lambda_next;
  return k;
}

/// Densely assembled C^-1 (interior block) obtained by applying the preconditioner to unit vectors.
inline DenseMatrix dense_preconditioner(const TwoGridPreconditioner& pc, Index n, const std::vector<int>& idx)
{
  DenseMatrix C(idx.size(), idx.size());
  Vector e = Vector::Zero(n);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    e[idx[j]] = 1.0;
    const Vector z = pc.apply(e);
    e[idx[j]] = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) C(i, j) = z[idx[i]];
  }
  return C;
}

struct TwoGridSpectrum {
  double rho = 0.0;    ///< spectral radius of E_TG = I - C^-1 Q
  double mu_min = 0.0; ///< extreme eigenvalues of C^-1 Q
  double mu_max = 0.0;
  double condition() const { return mu_max / mu_min; }
};

/// Eigenvalues of C^-1 Q on the interior dofs of the Dirichlet-eliminated operator Q.
inline TwoGridSpectrum two_grid_spectrum(const SparseMatrix& Q, const TwoGridPreconditioner& pc, const std::vector<char>& mask, int max_dense = 2500)
{
  const std::vector<int> in = detail::interior_indices(mask);
  if (int(in.size()) > max_dense) throw DimensionError("two_grid_spectrum: dimension exceeds the dense limit");
  DenseMatrix Cinv = dense_preconditioner(pc, Q.rows(), in);
  Cinv = 0.5 * (Cinv + Cinv.transpose()).eval();
  const DenseMatrix QI = detail::dense_block(Q, in, in);
  Eigen::LLT<DenseMatrix> llt(QI);
  if (llt.info() != Eigen::Success) throw SolverError("two_grid_spectrum: Q is not positive definite");
  const DenseMatrix L = llt.matrixL();
  const Vector mu = symmetric_eigenvalues(L.transpose() * Cinv * L);
  TwoGridSpectrum s;
  if (mu.size() == 0) return s;
  s.mu_min = mu.minCoeff();
  s.mu_max = mu.maxCoeff();
  s.rho = std::max(std::abs(1.0 - s.mu_min), std::abs(1.0 - s.mu_max));
  return s;
}

} // namespace anisomg
