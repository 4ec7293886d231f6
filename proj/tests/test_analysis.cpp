#include "anisomg/analysis.hh"

#include <gtest/gtest.h>

using namespace anisomg;

namespace {
struct Instance {
  Grids g;
  FieldSpec s;
  SparseMatrix M, A;
  SpectralBasis sb;
};

Instance instance(int nx, int r, int J, double ratio, int preset = 0)
{
  Instance in{build_grids(nx, nx, r, 2), builtin_tests(1.0, ratio)[preset], {}, {}, {}};
  in.M = assemble_mass(in.g);
  in.A = assemble_stiffness(in.g, in.s);
  in.sb = build_spectral_basis(in.g, in.s, J);
  return in;
}
} // namespace

TEST(NormContext, QNormIdentityAndTwoBFormulas)
{
  const auto in = instance(2, 3, 2, 1e6);
  const NormContext ctx(in.M, in.A, 5e-7);
  for (const Vector& v : random_vectors(in.g.dofs.size(), 5, 3)) {
    const double q = ctx.sq_Q(v), id = ctx.sq_M(v) / ctx.tau + ctx.sq_A(v);
    EXPECT_LT(std::abs(q - id), 1e-12 * q);
    EXPECT_LT(std::abs(ctx.sq_B(v) - ctx.sq_B_direct(v)), 1e-12 * ctx.sq_B(v));
  }
  EXPECT_THROW(NormContext(in.M, in.A, 0.0), ConfigError);
}

TEST(RandomVectors, SeedDeterminesSamples)
{
  const auto a = random_vectors(10, 3, 42), b = random_vectors(10, 3, 42), c = random_vectors(10, 3, 43);
  for (int k = 0; k < 3; ++k) EXPECT_EQ((a[k] - b[k]).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((a[0] - c[0]).norm(), 0.0);
}

TEST(LocalProjection, ReproducesBasisAndAnnihilatesComplement)
{
  const auto in = instance(2, 3, 3, 1e6);
  const auto& r = in.sb.local[4];
  const Vector phi2 = r.vectors.col(1);
  EXPECT_LT((local_projection(r, phi2) - phi2).norm(), 1e-10 * phi2.norm());
  // Component D-orthogonal to the selected basis.
  Vector v = random_vectors(r.size(), 1, 5)[0];
  v -= local_projection(r, v);
  EXPECT_LT(local_projection(r, v).norm(), 1e-10 * v.norm());
  for (const Vector& w : random_vectors(r.size(), 10, 6)) {
    const Vector pw = local_projection(r, w);
    EXPECT_LE(pw.dot(r.D.cwiseProduct(pw)), w.dot(r.D.cwiseProduct(w)) * (1 + 1e-12));
  }
}

TEST(LocalEstimates, SpanHasZeroLeftSides)
{
  const auto in = instance(2, 3, 3, 1e6);
  const auto& r = in.sb.local[4];
  const LocalOperator op = local_operator(in.g, in.s, in.sb.subdomains[4]);
  const Vector v = r.basis() * Vector::LinSpaced(3, 1, 3);
  const EstimateReport rep = check_local_estimates(r, op.A, {v});
  for (const auto& c : rep.checks) EXPECT_LT(c.lhs, 1e-20 * v.dot(r.D.cwiseProduct(v)) + 1e-25);
}

TEST(LocalEstimates, FirstOmittedEigenvectorIsTight)
{
  const auto in = instance(2, 3, 3, 1e6);
  for (std::size_t i = 0; i < in.sb.local.size(); ++i) {
    const auto& r = in.sb.local[i];
    const LocalOperator op = local_operator(in.g, in.s, in.sb.subdomains[i]);
    const EstimateReport rep = check_local_estimates(r, op.A, {Vector(r.vectors.col(r.J))});
    const auto& weak = rep.checks[0];
    EXPECT_EQ(weak.name, "weak");
    EXPECT_NEAR(weak.lhs, weak.rhs, 1e-10 * weak.rhs);
  }
}

TEST(LocalEstimates, RandomSamplesPassOnAllSubdomains)
{
  for (int preset : {0, 1, 2}) {
    const auto in = instance(3, 3, 4, 1e6, preset);
    for (std::size_t i = 0; i < in.sb.local.size(); ++i) {
      const LocalOperator op = local_operator(in.g, in.s, in.sb.subdomains[i]);
      const EstimateReport rep = check_local_estimates(in.sb.local[i], op.A, random_vectors(op.D.size(), 100, 100 + i));
      EXPECT_TRUE(rep.pass()) << preset << " " << i << " " << rep.min_margin();
    }
  }
}

TEST(GlobalInterpolation, ReproducesConstantsAndMatchesDenseMatrix)
{
  const auto in = instance(2, 3, 3, 1e6);
  const GlobalInterpolation pi(in.sb, in.sb.P());
  const Vector one = Vector::Ones(in.g.dofs.size());
  EXPECT_LT((pi.apply(one) - one).cwiseAbs().maxCoeff(), 1e-10);
  // Dense oracle: sum_i R_i^T diag(chi_i) Phi_i Phi_i^T D_i R_i.
  const int N = in.g.dofs.size();
  DenseMatrix O = DenseMatrix::Zero(N, N);
  for (std::size_t i = 0; i < in.sb.subdomains.size(); ++i) {
    const auto& s = in.sb.subdomains[i];
    const auto& r = in.sb.local[i];
    DenseMatrix R = DenseMatrix::Zero(s.size(), N);
    for (int l = 0; l < s.size(); ++l) R(l, s.dofs[l]) = 1.0;
    const Vector chi = partition_of_unity_weights(in.g.coarse, in.g.dofs, s);
    O += R.transpose() * chi.asDiagonal() * r.basis() * r.basis().transpose() * r.D.asDiagonal() * R;
  }
  EXPECT_LT((pi.dense() - O).cwiseAbs().maxCoeff(), 1e-12 * O.cwiseAbs().maxCoeff());
  for (const Vector& v : random_vectors(N, 3, 1)) EXPECT_LT((pi.apply(v) - O * v).norm(), 1e-12 * (O * v).norm());
}

TEST(GlobalEstimates, ConstantVectorGivesZeroConstants)
{
  const auto in = instance(2, 3, 3, 1e6);
  const NormContext ctx(in.M, in.A, 5e-7);
  const GlobalInterpolation pi(in.sb, in.sb.P());
  const EstimateReport rep = check_global_estimates(pi, ctx, lambda_next_global(in.g.coarse, in.sb.local), in.g.coarse.H(), {Vector::Ones(in.g.dofs.size())});
  EXPECT_EQ(rep.values.at("c_weak"), 0.0);
  EXPECT_EQ(rep.values.at("c_strong"), 0.0);
  EXPECT_EQ(rep.values.at("c_fap"), 0.0);
  EXPECT_TRUE(rep.pass());
}

TEST(GlobalEstimates, WeakConstantWithinOverlapBoundAndCorruptionDetected)
{
  const auto in = instance(3, 3, 4, 1e6);
  const NormContext ctx(in.M, in.A, 5e-7);
  const double lam = lambda_next_global(in.g.coarse, in.sb.local);
  const auto samples = estimate_samples(in.g.dofs, 50, 9);
  const EstimateReport ok = check_global_estimates(GlobalInterpolation(in.sb, in.sb.P()), ctx, lam, in.g.coarse.H(), samples);
  EXPECT_TRUE(ok.pass());
  EXPECT_LE(ok.values.at("c_weak"), 4.0);
  SparseMatrix bad = in.sb.P();
  bad.prune([](Index, Index c, double) { return c != 0; });
  const EstimateReport fail = check_global_estimates(GlobalInterpolation(in.sb, bad), ctx, lam, in.g.coarse.H(), samples);
  EXPECT_FALSE(fail.pass());
}

TEST(GlobalEstimates, ConstantsShrinkAsBasisGrows)
{
  const auto in = instance(3, 3, 16, 1e6);
  const NormContext ctx(in.M, in.A, 5e-7);
  const auto samples = estimate_samples(in.g.dofs, 20, 4);
  double prev = std::numeric_limits<double>::infinity();
  for (int J : {2, 8, 16}) {
    const SpectralBasis b = restrict_basis(in.sb, J, in.g);
    const double lam = lambda_next_global(in.g.coarse, b.local);
    const GlobalInterpolation pi(b, b.P());
    double worst = 0.0;
    for (const Vector& v : samples) {
      const Vector e = v - pi.apply(v);
      worst = std::max(worst, ctx.sq_D(e) / ctx.sq_D(v));
    }
    EXPECT_LT(worst, prev) << J;
    prev = worst;
    (void)lam;
  }
}

TEST(GlobalEstimates, WeakConstantBoundedUnderRefinement)
{
  for (int r : {2, 4, 8}) {
    const auto in = instance(3, r, 4, 1e3);
    const NormContext ctx(in.M, in.A, 5e-7);
    const EstimateReport rep = check_global_estimates(GlobalInterpolation(in.sb, in.sb.P()), ctx, lambda_next_global(in.g.coarse, in.sb.local),
                                                      in.g.coarse.H(), estimate_samples(in.g.dofs, 20, r));
    EXPECT_GT(rep.values.at("c_weak"), 0.0) << r;
    EXPECT_LE(rep.values.at("c_weak"), 4.0) << r;
  }
}

TEST(RelativeError, Examples)
{
  const Vector a = Vector::LinSpaced(5, 1, 5);
  EXPECT_EQ(relative_l2_error(a, a), 0.0);
  EXPECT_EQ(relative_l2_error(a, Vector::Zero(5)), 1.0);
  EXPECT_THROW(relative_l2_error(a, Vector::Zero(4)), DimensionError);
}

TEST(TransientEstimate, FullBasisGivesZeroLeftSide)
{
  const Grids g = build_grids(1, 1, 3, 2);
  const FieldSpec s = builtin_tests(1.0, 1e6)[0];
  const SparseMatrix M = assemble_mass(g), A = assemble_stiffness(g, s);
  const NormContext ctx(M, A, 5e-7);
  const TransientProblem prob = make_problem(g, s, 5e-7, 3);
  const SpectralBasis sb = build_spectral_basis(g, s, g.dofs.size());
  const MultiscaleRun ms = multiscale_transient_solve(prob, M, A, sb.P());
  const FineRun ref = fine_transient_solve(prob, M, A, FineSolveOptions{});
  const TransientEstimate te = check_transient_estimate(ref.states, ms.states, ctx, 1.0);
  const double scale = ctx.sq_M(ref.states.back()) + ctx.tau * ctx.sq_A(ref.states.back());
  EXPECT_LT(te.lhs, 1e-18 * scale);
}

TEST(TransientEstimate, LeftSideDecreasesWithBasisSizeAndBoundHolds)
{
  const Grids g = build_grids(4, 4, 4, 2);
  const FieldSpec s = builtin_tests(1.0, 1e6)[0];
  const SparseMatrix M = assemble_mass(g), A = assemble_stiffness(g, s);
  const NormContext ctx(M, A, 5e-7);
  const TransientProblem prob = make_problem(g, s, 5e-7, 10);
  const SpectralBasis full = build_spectral_basis(g, s, 16);
  double prev = std::numeric_limits<double>::infinity();
  for (int J : {1, 4, 16}) {
    const SpectralBasis b = restrict_basis(full, J, g);
    const MultiscaleRun ms = multiscale_transient_solve(prob, M, A, b.P());
    TransientProblem matched = prob;
    matched.initial = ms.states.front();
    const FineRun ref = fine_transient_solve(matched, M, A, FineSolveOptions{});
    const TransientEstimate te = check_transient_estimate(ref.states, ms.states, ctx, lambda_next_global(g.coarse, b.local));
    EXPECT_LT(te.lhs, prev) << J;
    EXPECT_LE(te.ratio(), 1.0) << J;
    EXPECT_EQ(te.initial_error, 0.0);
    prev = te.lhs;
  }
}

TEST(Ktg, IdentityInterpolationGivesZero)
{
  // On one coarse cell with the full basis, Pi v = sum_i chi_i v = v.
  const Grids g = build_grids(1, 1, 3, 2);
  const FieldSpec s = builtin_tests(1.0, 1e6)[0];
  const SparseMatrix M = assemble_mass(g), A = assemble_stiffness(g, s);
  const NormContext ctx(M, A, 5e-7);
  const SpectralBasis sb = build_spectral_basis(g, s, g.dofs.size());
  const GlobalInterpolation pi(sb, sb.P());
  const KtgResult k = measure_ktg(ctx, g.dofs.boundary, pi, 1.0);
  EXPECT_LT(k.measured, 1e-12);
}

TEST(Ktg, DecreasesWithBasisSizeAndBoundsConvergenceFactor)
{
  const auto in = instance(3, 3, 8, 1e6);
  const NormContext ctx(in.M, in.A, 5e-7);
  const SparseMatrix Qbc = eliminate_dirichlet(ctx.Q, in.g.dofs.boundary, Vector::Zero(in.g.dofs.size())).matrix;
  double prev = std::numeric_limits<double>::infinity();
  for (int J : {2, 4, 8}) {
    const SpectralBasis b = restrict_basis(in.sb, J, in.g);
    const double lam = lambda_next_global(in.g.coarse, b.local);
    const KtgResult k = measure_ktg(ctx, in.g.dofs.boundary, GlobalInterpolation(b, b.P()), lam);
    EXPECT_LT(k.measured, prev) << J;
    EXPECT_LE(k.measured, k.bound) << J;
    prev = k.measured;
    const TwoGridPreconditioner pc(Qbc, zero_rows(b.P(), in.g.dofs.boundary), Smoother{});
    const TwoGridSpectrum sp = two_grid_spectrum(Qbc, pc, in.g.dofs.boundary);
    EXPECT_LT(sp.rho, 1.0);
    EXPECT_LE(sp.rho, 1.0 - 1.0 / k.measured + 1e-8) << J;
  }
}
