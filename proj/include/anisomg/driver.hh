#pragma once

/** @file driver.hh
    @brief Experiment commands behind the `anisomg` executable.

    Data outputs (CSV, JSON, Matrix Market, VTK) depend only on the configuration
    and seed; wall-clock timings are written to separate `*timings*` files.
*/

#include "anisomg/analysis.hh"
#include "anisomg/config.hh"
#include "anisomg/fem.hh"
#include "anisomg/io.hh"
#include "anisomg/mesh.hh"
#include "anisomg/msbasis.hh"
#include "anisomg/solver.hh"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace anisomg {

enum ExitCode { ExitSuccess = 0, ExitConfig = 1, ExitVerification = 2, ExitSolver = 3 };

using Json = nlohmann::json;

namespace detail {

inline std::string out_path(const ExperimentConfig& c, const std::string& name)
{
  std::filesystem::create_directories(c.output_dir);
  return (std::filesystem::path(c.output_dir) / name).string();
}

inline std::string provenance(const ExperimentConfig& c) { return "config_hash=" + c.hash() + " seed=" + std::to_string(c.seed); }

inline Json provenance_json(const ExperimentConfig& c)
{
  Json j;
  j["config_hash"] = c.hash();
  j["seed"] = c.seed;
  Json cfg = Json::object();
  for (const auto& [k, v] : c.raw)
    if (k != "output.dir") cfg[k] = v;
  j["config"] = cfg;
  return j;
}

inline void write_json(const std::string& path, const Json& j)
{
  auto os = open_output(path);
  os << j.dump(2) << "\n";
}

inline double elapsed(std::chrono::steady_clock::time_point t0) { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }

inline Json mesh_summary(const Grids& g)
{
  Json m;
  m["coarse_nx"] = g.coarse.nx;
  m["coarse_ny"] = g.coarse.ny;
  m["refinement"] = g.fine.refinement;
  m["degree"] = g.dofs.degree;
  m["fine_vertices"] = g.fine.num_vertices();
  m["fine_edges"] = g.fine.num_edges();
  m["fine_triangles"] = g.fine.num_triangles();
  m["N_h"] = g.dofs.size();
  m["coarse_vertices"] = g.coarse.num_vertices();
  return m;
}

inline Json solve_report_json(const SolveReport& r)
{
  Json j;
  Json steps = Json::array();
  for (const auto& s : r.steps) {
    Json st;
    st["iterations"] = s.iterations;
    st["converged"] = s.converged;
    st["rel_residual"] = s.rel_residual;
    st["history"] = s.history;
    steps.push_back(st);
  }
  j["steps"] = steps;
  j["total_iterations"] = r.total_iterations();
  j["average_iterations"] = r.average_iterations();
  j["nc"] = r.nc();
  j["final_rel_residual"] = r.final_rel_residual();
  return j;
}

inline Json timing_json(const SolveReport& r)
{
  Json j;
  j["setup_seconds"] = r.setup_seconds;
  j["online_seconds"] = r.online_seconds;
  std::vector<double> per;
  for (const auto& s : r.steps) per.push_back(s.seconds);
  j["step_seconds"] = per;
  return j;
}

inline Vector field_component(const Grids& g, const FieldSpec& s, int comp)
{
  return interpolate(g.dofs, [&](Point x) {
    const Vec2 b = eval_b(s, x);
    return comp == 0 ? b.x : b.y;
  });
}

inline std::string format_fixed(double v, const char* fmt)
{
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline int max_J(const ExperimentConfig& c)
{
  int m = c.J;
  for (int j : c.J_list) m = std::max(m, j);
  return m;
}

} // namespace detail

/// Fine reference run and, in multiscale mode, the reduced-order run with its relative error.
inline int cmd_solve(const ExperimentConfig& c, std::ostream& log = std::cerr)
{
  const Grids g = build_grids(c.nx, c.ny, c.r, c.degree);
  const SparseMatrix M = assemble_mass(g);
  const SparseMatrix A = assemble_stiffness(g, c.field);
  const TransientProblem prob = make_problem(g, c.field, c.tau, c.steps, c.bump, c.source_scale);
  const FineSolveOptions fo = c.fine_options();
  const bool need_P = c.mode == SolveMode::Multiscale || (c.linear == LinearSolverKind::Pcg && c.two_grid);

  Json rep = detail::provenance_json(c);
  Json tim = detail::provenance_json(c);
  rep["mesh"] = detail::mesh_summary(g);
  rep["mode"] = c.mode == SolveMode::Multiscale ? "multiscale" : "reference";
  rep["prolongation_built"] = need_P;

  std::optional<SpectralBasis> sb;
  if (need_P) {
    const auto t0 = std::chrono::steady_clock::now();
    sb = build_spectral_basis(g, c.field, c.J, c.eig);
    tim["basis_seconds"] = detail::elapsed(t0);
    rep["DOF_H"] = sb->dof_H();
    rep["J"] = c.J;
    rep["lambda_next"] = lambda_next_global(g.coarse, sb->local);
  }
  const FineRun ref = fine_transient_solve(prob, M, A, fo, sb ? &sb->P() : nullptr);
  rep["reference"] = detail::solve_report_json(ref.report);
  tim["reference"] = detail::timing_json(ref.report);
  if (ref.report.nc()) log << "warning: reference PCG did not converge in some steps (nc)\n";

  std::vector<std::pair<std::string, Vector>> fields = {{"T0", prob.initial}, {"T_h", ref.states.back()}};
  if (c.mode == SolveMode::Multiscale) {
    const MultiscaleRun ms = multiscale_transient_solve(prob, M, A, sb->P());
    rep["multiscale"] = detail::solve_report_json(ms.report);
    tim["multiscale"] = detail::timing_json(ms.report);
    std::vector<double> errs;
    for (std::size_t k = 1; k < ms.states.size(); ++k) errs.push_back(relative_l2_error(ref.states[k], ms.states[k]));
    rep["step_errors"] = errs;
    rep["err"] = errs.back();
    fields.emplace_back("T_ms", ms.states.back());
    log << "err = " << format_sci(errs.back()) << "  DOF_H = " << sb->dof_H() << "\n";
  }
  fields.emplace_back("b_x", detail::field_component(g, c.field, 0));
  fields.emplace_back("b_y", detail::field_component(g, c.field, 1));
  detail::write_json(detail::out_path(c, "report.json"), rep);
  detail::write_json(detail::out_path(c, "timings.json"), tim);
  auto os = open_output(detail::out_path(c, "fields.vtk"));
  write_vtk(os, g, fields, "anisomg solve " + detail::provenance(c));
  return ExitSuccess;
}

/// err per (J, ratio) against the fine direct solution; failed cells are recorded and the sweep continues.
inline int cmd_sweep(const ExperimentConfig& c, std::ostream& log = std::cerr)
{
  const Grids g = build_grids(c.nx, c.ny, c.r, c.degree);
  const SparseMatrix M = assemble_mass(g);
  CsvTable table{{"J", "DOF_H", "ratio", "err", "status"}, {}};
  CsvTable timing{{"J", "ratio", "tm_s", "basis_s"}, {}};
  std::vector<std::vector<std::string>> plot;

  for (double ratio : c.sweep.ratios) {
    const FieldSpec spec = c.field.with_ratio(ratio);
    const std::string rs = format_sci(ratio);
    std::optional<SpectralBasis> full;
    std::optional<FineRun> ref;
    std::optional<TransientProblem> prob;
    SparseMatrix A;
    double basis_s = 0.0;
    std::string setup_error;
    try {
      A = assemble_stiffness(g, spec);
      prob = make_problem(g, spec, c.tau, c.steps, c.bump, c.source_scale);
      FineSolveOptions fo;
      ref = fine_transient_solve(*prob, M, A, fo);
      const auto t0 = std::chrono::steady_clock::now();
      full = build_spectral_basis(g, spec, *std::max_element(c.J_list.begin(), c.J_list.end()), c.eig);
      basis_s = detail::elapsed(t0);
    } catch (const Error& e) {
      setup_error = e.what();
    }
    for (int J : c.J_list) {
      if (!setup_error.empty()) {
        table.add_row({std::to_string(J), "0", rs, "nan", "fail"});
        timing.add_row({std::to_string(J), rs, "nan", "nan"});
        log << "sweep cell J=" << J << " ratio=" << rs << " failed: " << setup_error << "\n";
        continue;
      }
      const SpectralBasis sb = restrict_basis(*full, J, g);
      try {
        const MultiscaleRun ms = multiscale_transient_solve(*prob, M, A, sb.P());
        const double err = relative_l2_error(ref->states.back(), ms.states.back());
        table.add_row({std::to_string(J), std::to_string(sb.dof_H()), rs, format_sci(err), "ok"});
        timing.add_row({std::to_string(J), rs, format_sci(ms.report.online_seconds), format_sci(basis_s)});
        plot.push_back({std::to_string(sb.dof_H()), format_sci(err), rs, std::to_string(J)});
      } catch (const Error& e) {
        table.add_row({std::to_string(J), std::to_string(sb.dof_H()), rs, "nan", "nc"});
        timing.add_row({std::to_string(J), rs, "nan", format_sci(basis_s)});
        log << "sweep cell J=" << J << " ratio=" << rs << " failed: " << e.what() << "\n";
      }
    }
  }
  const std::vector<std::string> prov = {detail::provenance(c)};
  {
    auto os = open_output(detail::out_path(c, "sweep.csv"));
    table.write(os, prov);
  }
  {
    auto os = open_output(detail::out_path(c, "sweep_timings.csv"));
    timing.write(os, prov);
  }
  {
    auto os = open_output(detail::out_path(c, "err_vs_dofH.dat"));
    os << "# " << prov[0] << "\n# DOF_H err ratio J\n";
    for (const auto& r : plot) os << r[0] << " " << r[1] << " " << r[2] << " " << r[3] << "\n";
  }
  return ExitSuccess;
}

/// Average PCG iterations per time step per (J, ratio, smoother), plus an identity-preconditioned baseline.
inline int cmd_precond_bench(const ExperimentConfig& c, std::ostream& log = std::cerr)
{
  const Grids g = build_grids(c.nx, c.ny, c.r, c.degree);
  const SparseMatrix M = assemble_mass(g);
  CsvTable table{{"J", "DOF_H", "ratio", "smoother", "Nbar", "status"}, {}};
  CsvTable timing{{"J", "ratio", "smoother", "tm_s", "basis_s"}, {}};

  for (double ratio : c.sweep.ratios) {
    const FieldSpec spec = c.field.with_ratio(ratio);
    const std::string rs = format_sci(ratio);
    const SparseMatrix A = assemble_stiffness(g, spec);
    const TransientProblem prob = make_problem(g, spec, c.tau, c.steps, c.bump, c.source_scale);
    FineSolveOptions base;
    base.linear = LinearSolverKind::Pcg;
    base.rtol = c.rtol;
    base.maxiter = c.maxiter;
    if (c.identity_baseline) {
      FineSolveOptions o = base;
      o.two_grid = false;
      try {
        const FineRun run = fine_transient_solve(prob, M, A, o);
        table.add_row({"0", "0", rs, "identity", detail::format_fixed(run.report.average_iterations(), "%.1f"), run.report.nc() ? "nc" : "ok"});
        timing.add_row({"0", rs, "identity", format_sci(run.report.online_seconds), "0"});
      } catch (const Error& e) {
        table.add_row({"0", "0", rs, "identity", "nan", "fail"});
        timing.add_row({"0", rs, "identity", "nan", "0"});
        log << "baseline ratio=" << rs << " failed: " << e.what() << "\n";
      }
    }
    const auto t0 = std::chrono::steady_clock::now();
    const SpectralBasis full = build_spectral_basis(g, spec, *std::max_element(c.J_list.begin(), c.J_list.end()), c.eig);
    const double basis_s = detail::elapsed(t0);
    for (int J : c.J_list) {
      const SpectralBasis sb = restrict_basis(full, J, g);
      for (SmootherKind k : c.smoothers) {
        FineSolveOptions o = base;
        o.smoother = Smoother{k, c.smoother.nu, c.smoother.omega};
        try {
          const FineRun run = fine_transient_solve(prob, M, A, o, &sb.P());
          table.add_row({std::to_string(J), std::to_string(sb.dof_H()), rs, to_string(k), detail::format_fixed(run.report.average_iterations(), "%.1f"),
                         run.report.nc() ? "nc" : "ok"});
          timing.add_row({std::to_string(J), rs, to_string(k), format_sci(run.report.online_seconds), format_sci(basis_s)});
        } catch (const Error& e) {
          table.add_row({std::to_string(J), std::to_string(sb.dof_H()), rs, to_string(k), "nan", "fail"});
          timing.add_row({std::to_string(J), rs, to_string(k), "nan", format_sci(basis_s)});
          log << "bench cell J=" << J << " ratio=" << rs << " " << to_string(k) << " failed: " << e.what() << "\n";
        }
      }
    }
  }
  const std::vector<std::string> prov = {detail::provenance(c)};
  {
    auto os = open_output(detail::out_path(c, "bench.csv"));
    table.write(os, prov);
  }
  {
    auto os = open_output(detail::out_path(c, "bench_timings.csv"));
    timing.write(os, prov);
  }
  return ExitSuccess;
}

namespace detail {

inline Json report_json(const EstimateReport& r)
{
  Json j;
  j["pass"] = r.pass();
  j["checks"] = r.checks.size();
  j["failed"] = r.num_failed();
  Json by = Json::object();
  std::map<std::string, std::pair<int, double>> agg;
  for (const auto& c : r.checks) {
    auto& a = agg.try_emplace(c.name, 0, std::numeric_limits<double>::infinity()).first->second;
    a.first += c.pass() ? 0 : 1;
    a.second = std::min(a.second, c.margin());
  }
  for (const auto& [name, a] : agg) by[name] = {{"failed", a.first}, {"min_margin", a.second}};
  j["inequalities"] = by;
  Json vals = Json::object();
  for (const auto& [k, v] : r.values) vals[k] = std::isfinite(v) ? Json(v) : Json(std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
  j["values"] = vals;
  j["failures"] = r.failures;
  j["warnings"] = r.warnings;
  return j;
}

} // namespace detail

/// Local, global, transient and two-grid estimate suites. Exit code 2 on any hard failure.
inline int cmd_verify(const ExperimentConfig& c, std::ostream& log = std::cerr)
{
  const Grids g = build_grids(c.nx, c.ny, c.r, c.degree);
  const SparseMatrix M = assemble_mass(g);
  const SparseMatrix A = assemble_stiffness(g, c.field);
  const NormContext ctx(M, A, c.tau);
  const SpectralBasis full = build_spectral_basis(g, c.field, detail::max_J(c), c.eig);
  const SpectralBasis sb = restrict_basis(full, c.J, g);
  Json out = detail::provenance_json(c);
  out["mesh"] = detail::mesh_summary(g);
  bool ok = true;

  // Local suite.
  {
    EstimateReport local;
    local.suite = "local";
    const int ns = int(sb.subdomains.size());
    const int count = c.analysis_subdomains > 0 ? std::min(c.analysis_subdomains, ns) : ns;
    double tight = 0.0;
    for (int k = 0; k < count; ++k) {
      const int i = count == ns ? k : int((long long)k * ns / count);
      const LocalOperator op = local_operator(g, c.field, sb.subdomains[i]);
      const auto& r = sb.local[i];
      local.merge(check_local_estimates(r, op.A, random_vectors(r.size(), c.samples, c.seed + std::uint64_t(i))));
      if (r.eigenvalues.size() > r.J) {
        const Vector v = r.vectors.col(r.J);
        const Vector e = v - local_projection(r, v);
        const double lhs = e.dot(r.D.cwiseProduct(e)), rhs = v.dot(op.A * v) / r.lambda_next();
        tight = std::max(tight, std::abs(lhs - rhs) / rhs);
      }
    }
    local.values["subdomains_checked"] = count;
    local.values["max_tightness_defect"] = tight;
    if (!(tight <= 1e-8)) local.failures.push_back("weak inequality not tight for the first omitted eigenvector");
    out["suites"]["local"] = detail::report_json(local);
    ok = ok && local.pass();
  }

  // Global suite.
  const double lam = lambda_next_global(g.coarse, sb.local);
  {
    SparseMatrix P = sb.P();
    if (c.corrupt_column >= 0) {
      if (c.corrupt_column >= P.cols()) throw ConfigError("analysis.corrupt_column exceeds DOF_H");
      P.prune([&](Index, Index col, double) { return col != c.corrupt_column; });
      log << "verify: column " << c.corrupt_column << " of P zeroed\n";
    }
    const GlobalInterpolation pi(sb, P);
    EstimateReport global = check_global_estimates(pi, ctx, lam, g.coarse.H(), estimate_samples(g.dofs, c.samples, c.seed));
    global.values["Lambda_star"] = lam * g.coarse.H() * g.coarse.H();
    const Vector one = Vector::Ones(g.dofs.size());
    const double defect = (pi.apply(one) - one).cwiseAbs().maxCoeff();
    global.values["constant_defect"] = defect;
    if (!(defect <= 1e-10)) global.failures.push_back("interpolation does not reproduce constants");
    out["suites"]["global"] = detail::report_json(global);
    ok = ok && global.pass();
  }

  // Transient suite: fine run from the multiscale initial state.
  {
    EstimateReport tr;
    tr.suite = "transient";
    const TransientProblem prob = make_problem(g, c.field, c.tau, c.steps, c.bump, c.source_scale);
    Json rows = Json::array();
    double prev = std::numeric_limits<double>::infinity();
    std::vector<int> js = c.J_list;
    std::sort(js.begin(), js.end());
    for (int J : js) {
      const SpectralBasis b = restrict_basis(full, J, g);
      const MultiscaleRun ms = multiscale_transient_solve(prob, M, A, b.P());
      TransientProblem matched = prob;
      matched.initial = ms.states.front();
      const FineRun ref = fine_transient_solve(matched, M, A, FineSolveOptions{});
      const double lj = lambda_next_global(g.coarse, b.local);
      const TransientEstimate te = check_transient_estimate(ref.states, ms.states, ctx, lj);
      rows.push_back({{"J", J}, {"lhs", te.lhs}, {"rhs", te.rhs}, {"ratio", te.ratio()}, {"lambda_next", lj}});
      if (!std::isfinite(te.ratio())) tr.failures.push_back("non-finite estimate ratio at J=" + std::to_string(J));
      if (te.lhs > prev) tr.warnings.push_back("LHS not decreasing at J=" + std::to_string(J));
      prev = te.lhs;
    }
    Json j = detail::report_json(tr);
    j["rows"] = rows;
    out["suites"]["transient"] = j;
    ok = ok && tr.pass();
  }

  // Two-grid suite (dense).
  {
    EstimateReport tg;
    tg.suite = "twogrid";
    Json rows = Json::array();
    const int interior = g.dofs.size() - g.dofs.num_boundary();
    if (interior > c.analysis_max_dense) {
      tg.warnings.push_back("skipped: " + std::to_string(interior) + " interior dofs exceed analysis.max_dense");
      log << "verify: two-grid suite skipped (dimension)\n";
    } else {
      const DirichletSystem Qbc = eliminate_dirichlet(ctx.Q, g.dofs.boundary, Vector::Zero(g.dofs.size()));
      std::vector<int> js = c.J_list;
      std::sort(js.begin(), js.end());
      for (int J : js) {
        const SpectralBasis b = restrict_basis(full, J, g);
        const GlobalInterpolation pi(b, b.P());
        const double lj = lambda_next_global(g.coarse, b.local);
        const KtgResult k = measure_ktg(ctx, g.dofs.boundary, pi, lj, c.analysis_max_dense);
        const TwoGridPreconditioner pc(Qbc.matrix, zero_rows(b.P(), g.dofs.boundary), c.smoother);
        const TwoGridSpectrum sp = two_grid_spectrum(Qbc.matrix, pc, g.dofs.boundary, c.analysis_max_dense);
        tg.checks.push_back({"rho_below_one", J, sp.rho, 1.0});
        tg.checks.push_back({"rho_vs_ktg", J, sp.rho, 1.0 - 1.0 / k.measured + 1e-8});
        tg.checks.push_back({"ktg_vs_bound", J, k.measured, k.bound});
        rows.push_back({{"J", J}, {"K_measured", k.measured}, {"K_bound", k.bound}, {"C_hat", k.c_hat}, {"rho", sp.rho}, {"condition", sp.condition()}});
      }
    }
    Json j = detail::report_json(tg);
    j["rows"] = rows;
    out["suites"]["twogrid"] = j;
    ok = ok && tg.pass();
  }

  out["pass"] = ok;
  detail::write_json(detail::out_path(c, "verify.json"), out);
  log << (ok ? "verify: all suites pass\n" : "verify: FAILED\n");
  return ok ? ExitSuccess : ExitVerification;
}

/// Operators in Matrix Market form, per-subdomain eigenvalues and basis fields for plotting.
inline int cmd_export(const ExperimentConfig& c, std::ostream& log = std::cerr)
{
  const Grids g = build_grids(c.nx, c.ny, c.r, c.degree);
  const SparseMatrix M = assemble_mass(g);
  const SparseMatrix A = assemble_stiffness(g, c.field);
  const SparseMatrix Q = time_step_operator(M, A, c.tau);
  const SpectralBasis sb = build_spectral_basis(g, c.field, c.J, c.eig);
  const std::vector<std::string> prov = {detail::provenance(c)};
  for (const auto& [name, X] : std::vector<std::pair<std::string, const SparseMatrix*>>{{"M.mtx", &M}, {"A.mtx", &A}, {"Q.mtx", &Q}, {"P.mtx", &sb.P()}}) {
    auto os = open_output(detail::out_path(c, name));
    write_matrix_market(os, *X, prov);
  }
  CsvTable eig{{"subdomain", "j", "lambda"}, {}};
  for (const auto& r : sb.local)
    for (Index j = 0; j < r.eigenvalues.size(); ++j) eig.add_row({std::to_string(r.index), std::to_string(j + 1), format_double(r.eigenvalues[j])});
  {
    auto os = open_output(detail::out_path(c, "eigenvalues.csv"));
    eig.write(os, prov);
  }
  // Basis functions of the subdomain nearest the domain centre.
  int centre = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : sb.subdomains) {
    const double d = std::hypot(s.center.x - 0.5, s.center.y - 0.5);
    if (d < best) best = d, centre = s.index;
  }
  std::vector<std::pair<std::string, Vector>> fields = {{"b_x", detail::field_component(g, c.field, 0)}, {"b_y", detail::field_component(g, c.field, 1)}};
  const auto& r = sb.local[centre];
  for (int j = 0; j < r.J; ++j) {
    Vector phi = Vector::Zero(g.dofs.size());
    for (int l = 0; l < r.size(); ++l) phi[sb.subdomains[centre].dofs[l]] = r.vectors(l, j);
    fields.emplace_back("phi_" + std::to_string(j + 1), phi);
    fields.emplace_back("psi_" + std::to_string(j + 1), Vector(sb.P().col(sb.prolongation.offsets[centre] + j)));
  }
  {
    auto os = open_output(detail::out_path(c, "basis.vtk"));
    write_vtk(os, g, fields, "anisomg export " + detail::provenance(c));
  }
  Json summary = detail::provenance_json(c);
  summary["mesh"] = detail::mesh_summary(g);
  summary["DOF_H"] = sb.dof_H();
  summary["plotted_subdomain"] = centre;
  detail::write_json(detail::out_path(c, "export.json"), summary);
  log << "export: wrote operators for N_h = " << g.dofs.size() << ", DOF_H = " << sb.dof_H() << "\n";
  return ExitSuccess;
}

/// Maps exceptions to exit codes.
template <class Fn>
int run_guarded(Fn&& fn, std::ostream& log = std::cerr)
{
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return ExitConfig;
  } catch (const DimensionError& e) {
    log << "dimension error: " << e.what() << "\n";
    return ExitSolver;
  } catch (const SolverError& e) {
    log << "solver error: " << e.what() << "\n";
    return ExitSolver;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return ExitSolver;
  }
}

} // namespace anisomg
